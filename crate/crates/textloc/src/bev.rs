//! Bird's-eye-view rasterization of a local map.

use std::path::Path;

use crate::color::ColorRgb;
use crate::error::{Error, Result};
use crate::geom::{world_to_pixel, GeoReference};
use crate::map_builder::LocalMap;
use crate::taxonomy::LabelKind;

/// Top-down RGB raster of a map window.
#[derive(Debug, Clone, PartialEq)]
pub struct BevImage {
    pub georef: GeoReference,
    pub background: ColorRgb,
    /// Row-major pixels, length = width * height.
    pixels: Vec<ColorRgb>,
}

impl BevImage {
    pub fn pixel(&self, u: u32, v: u32) -> ColorRgb {
        self.pixels[(v * self.georef.width_px + u) as usize]
    }

    pub fn pixels(&self) -> &[ColorRgb] {
        &self.pixels
    }

    /// Raw RGB8 bytes, row-major.
    pub fn to_rgb_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len() * 3);
        for c in &self.pixels {
            out.extend_from_slice(&[c.r, c.g, c.b]);
        }
        out
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut encoder = png::Encoder::new(file, self.georef.width_px, self.georef.height_px);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let to_io = |e: png::EncodingError| Error::io(path, std::io::Error::other(e.to_string()));
        let mut writer = encoder.write_header().map_err(to_io)?;
        writer
            .write_image_data(&self.to_rgb_bytes())
            .map_err(to_io)?;
        Ok(())
    }
}

/// Priority of a pixel write: objects always beat stuff, then the higher
/// source point wins, then the higher node id. The rule is a commutative
/// max, so rendering order cannot change the output.
fn write_rank(kind: LabelKind, z: f64, id: u32) -> (u8, f64, u32) {
    let kind_rank = match kind {
        LabelKind::Object => 1,
        LabelKind::Stuff => 0,
    };
    (kind_rank, z, id)
}

/// Rasterizes the map: each object point projects to one pixel carrying
/// the object's mean color; untouched pixels keep the background color.
pub fn render_bev(map: &LocalMap, georef: &GeoReference) -> Result<BevImage> {
    if (georef.side_m - map.side_m).abs() > 1e-9 || georef.center != map.center {
        return Err(Error::Config(
            "georeference window must match the map window".into(),
        ));
    }
    let background = ColorRgb::BLACK;
    let n = (georef.width_px * georef.height_px) as usize;
    let mut best: Vec<Option<(u8, f64, u32)>> = vec![None; n];
    let mut colors: Vec<ColorRgb> = vec![background; n];

    for obj in &map.objects {
        let color = obj.mean_color();
        for (p, _) in &obj.points {
            let (px, _) = world_to_pixel(p.xy(), georef);
            let idx = (px.v * georef.width_px + px.u) as usize;
            let rank = write_rank(obj.kind, p.z, obj.id);
            let wins = match best[idx] {
                None => true,
                Some(prev) => {
                    rank.0 > prev.0
                        || (rank.0 == prev.0
                            && (rank.1 > prev.1 || (rank.1 == prev.1 && rank.2 > prev.2)))
                }
            };
            if wins {
                best[idx] = Some(rank);
                colors[idx] = color;
            }
        }
    }
    Ok(BevImage {
        georef: *georef,
        background,
        pixels: colors,
    })
}
