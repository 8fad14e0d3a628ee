//! RGB color math and the discrete color palette used for hint text.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::WorldPoint;

/// An 8-bit RGB color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColorRgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl ColorRgb {
    pub const BLACK: ColorRgb = ColorRgb { r: 0, g: 0, b: 0 };

    pub fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    /// Squared Euclidean distance in RGB space.
    pub fn dist2(&self, other: &ColorRgb) -> u32 {
        let dr = self.r as i32 - other.r as i32;
        let dg = self.g as i32 - other.g as i32;
        let db = self.b as i32 - other.b as i32;
        (dr * dr + dg * dg + db * db) as u32
    }
}

/// Per-channel arithmetic mean of the point colors, rounded half-up.
pub fn mean_color(points: &[(WorldPoint, ColorRgb)]) -> Result<ColorRgb> {
    if points.is_empty() {
        return Err(Error::EmptyObject);
    }
    let n = points.len() as u64;
    let (mut sr, mut sg, mut sb) = (0u64, 0u64, 0u64);
    for (_, c) in points {
        sr += c.r as u64;
        sg += c.g as u64;
        sb += c.b as u64;
    }
    // floor((2*sum + n) / (2n)) rounds sum/n half-up without float error
    let half_up = |sum: u64| ((2 * sum + n) / (2 * n)) as u8;
    Ok(ColorRgb::new(half_up(sr), half_up(sg), half_up(sb)))
}

/// An ordered list of named RGB centers; hint colors are the nearest center.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorPalette {
    entries: Vec<(String, ColorRgb)>,
}

impl ColorPalette {
    /// Builds a palette, validating that names are unique single tokens.
    pub fn new(entries: Vec<(String, ColorRgb)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Config("palette must not be empty".into()));
        }
        for (i, (name, _)) in entries.iter().enumerate() {
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(Error::Config(format!(
                    "palette name {name:?} must be a non-empty single token"
                )));
            }
            if entries[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::Config(format!("duplicate palette name {name:?}")));
            }
        }
        Ok(Self { entries })
    }

    /// The palette shipped with the toolkit (see `assets/palette.json`).
    ///
    /// Centers are repo defaults chosen to spread the seven names across
    /// RGB space; edit the asset file to recalibrate against a dataset.
    pub fn default_palette() -> Self {
        let entries = vec![
            ("dark-green", ColorRgb::new(0, 100, 0)),
            ("gray", ColorRgb::new(128, 128, 128)),
            ("gray-green", ColorRgb::new(110, 135, 110)),
            ("bright-gray", ColorRgb::new(200, 200, 200)),
            ("black", ColorRgb::new(0, 0, 0)),
            ("green", ColorRgb::new(0, 200, 0)),
            ("beige", ColorRgb::new(245, 245, 220)),
        ];
        Self::new(
            entries
                .into_iter()
                .map(|(n, c)| (n.to_owned(), c))
                .collect(),
        )
        .expect("default palette is valid")
    }

    /// Loads a palette from a JSON object mapping name -> [r, g, b].
    /// Entry order in the file fixes the tie-break order.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        let mut entries = Vec::with_capacity(value.len());
        for (name, rgb) in value {
            let channels: Vec<u8> =
                serde_json::from_value(rgb).map_err(|e| Error::json(path, e))?;
            if channels.len() != 3 {
                return Err(Error::Config(format!(
                    "palette entry {name:?} must have exactly 3 channels"
                )));
            }
            entries.push((name, ColorRgb::new(channels[0], channels[1], channels[2])));
        }
        Self::new(entries)
    }

    /// Writes the palette as a JSON object preserving entry order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut map = serde_json::Map::new();
        for (name, c) in &self.entries {
            map.insert(name.clone(), serde_json::json!([c.r, c.g, c.b]));
        }
        let text = serde_json::to_string_pretty(&map).expect("palette serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn entries(&self) -> &[(String, ColorRgb)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| n == name)
    }
}

/// Name of the palette center nearest to `c` in Euclidean RGB distance.
/// Ties go to the lowest palette index.
pub fn nearest_palette_color(c: ColorRgb, palette: &ColorPalette) -> &str {
    let mut best: Option<(&str, u32)> = None;
    for (name, center) in palette.entries() {
        let d = c.dist2(center);
        match best {
            Some((_, bd)) if d >= bd => {}
            _ => best = Some((name, d)),
        }
    }
    best.expect("palette is non-empty").0
}
