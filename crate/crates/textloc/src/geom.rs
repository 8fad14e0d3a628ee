//! Planar world frame and raster georeferencing.
//!
//! The world frame is a local planar East-North frame: `x` grows East,
//! `y` grows North, `z` up. Rasters follow image conventions: `u` is the
//! pixel column (East = u increases), `v` the pixel row (North = v
//! *decreases*, origin at the top-left).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the local planar world frame, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl WorldPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Ground-plane projection.
    pub fn xy(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

/// Squared ground-plane distance between two xy positions.
pub fn dist2_xy(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

/// Ground-plane distance between two xy positions.
pub fn dist_xy(a: (f64, f64), b: (f64, f64)) -> f64 {
    dist2_xy(a, b).sqrt()
}

/// Georeference tying a square raster to a world window.
///
/// The raster covers `side_m x side_m` meters centered on `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoReference {
    /// World xy of the window center.
    pub center: (f64, f64),
    /// Window side length in meters (S).
    pub side_m: f64,
    pub width_px: u32,
    pub height_px: u32,
}

impl GeoReference {
    pub fn new(center: (f64, f64), side_m: f64, width_px: u32, height_px: u32) -> Result<Self> {
        if !(side_m > 0.0) || !center.0.is_finite() || !center.1.is_finite() {
            return Err(Error::Config(format!(
                "invalid georeference: center {center:?}, side {side_m}"
            )));
        }
        if width_px != height_px || width_px < 2 {
            return Err(Error::Config(format!(
                "raster must be square with side >= 2, got {width_px}x{height_px}"
            )));
        }
        Ok(Self {
            center,
            side_m,
            width_px,
            height_px,
        })
    }

    /// Meters per pixel.
    pub fn resolution(&self) -> f64 {
        self.side_m / self.width_px as f64
    }

    /// World x of the window's west edge.
    pub fn west(&self) -> f64 {
        self.center.0 - self.side_m / 2.0
    }

    /// World y of the window's north edge.
    pub fn north(&self) -> f64 {
        self.center.1 + self.side_m / 2.0
    }
}

/// A pixel position on a georeferenced raster. Serializes as `[u, v]`,
/// matching the prompt schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "(u32, u32)", from = "(u32, u32)")]
pub struct PixelCoord {
    /// Column; East = u increases.
    pub u: u32,
    /// Row; North = v decreases.
    pub v: u32,
}

impl PixelCoord {
    pub fn new(u: u32, v: u32) -> Self {
        Self { u, v }
    }
}

impl From<PixelCoord> for (u32, u32) {
    fn from(px: PixelCoord) -> Self {
        (px.u, px.v)
    }
}

impl From<(u32, u32)> for PixelCoord {
    fn from((u, v): (u32, u32)) -> Self {
        Self { u, v }
    }
}

/// Rounds with .5 ties resolved toward the lower integer.
fn round_half_down(x: f64) -> i64 {
    (x - 0.5).ceil() as i64
}

/// Projects a world xy position onto the raster.
///
/// Pixel centers sit at half-integer offsets, so the inverse of
/// [`pixel_to_world`] lands back on the same pixel. The result is clamped
/// to the raster; the second return value is `false` when the input lay
/// outside the window (|p - center|_inf > S/2).
pub fn world_to_pixel(p: (f64, f64), g: &GeoReference) -> (PixelCoord, bool) {
    let s = g.side_m;
    let u_raw = round_half_down((p.0 - g.west()) * g.width_px as f64 / s - 0.5);
    let v_raw = round_half_down((g.north() - p.1) * g.height_px as f64 / s - 0.5);
    let u = u_raw.clamp(0, g.width_px as i64 - 1) as u32;
    let v = v_raw.clamp(0, g.height_px as i64 - 1) as u32;
    let half = s / 2.0;
    let in_window = (p.0 - g.center.0).abs() <= half && (p.1 - g.center.1).abs() <= half;
    (PixelCoord::new(u, v), in_window)
}

/// World xy coordinates of a pixel's center.
pub fn pixel_to_world(px: PixelCoord, g: &GeoReference) -> Result<(f64, f64)> {
    if px.u >= g.width_px || px.v >= g.height_px {
        return Err(Error::PixelOutOfRange {
            u: px.u as i64,
            v: px.v as i64,
            width: g.width_px,
            height: g.height_px,
        });
    }
    let s = g.side_m;
    let x = g.west() + (px.u as f64 + 0.5) * s / g.width_px as f64;
    let y = g.north() - (px.v as f64 + 0.5) * s / g.height_px as f64;
    Ok((x, y))
}
