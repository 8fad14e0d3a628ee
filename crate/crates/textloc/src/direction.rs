//! Cardinal direction of an object relative to a query position.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dist2_xy, WorldPoint};

/// Relative direction used in hint text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    North,
    South,
    East,
    West,
    OnTop,
}

impl Direction {
    /// The lowercase word used in hint templates.
    pub fn word(&self) -> &'static str {
        match self {
            Direction::North => "north",
            Direction::South => "south",
            Direction::East => "east",
            Direction::West => "west",
            Direction::OnTop => "on-top",
        }
    }

    pub fn from_word(word: &str) -> Option<Self> {
        match word {
            "north" => Some(Direction::North),
            "south" => Some(Direction::South),
            "east" => Some(Direction::East),
            "west" => Some(Direction::West),
            "on-top" => Some(Direction::OnTop),
            _ => None,
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.word())
    }
}

/// Classifies the direction from `xi` to an object given by its points.
///
/// "on-top" when the ground distance from `xi` to the object's closest
/// point is strictly below `delta`; otherwise the quadrant of the offset
/// from `xi` to the object's ground centroid, with |dx| = |dy| ties going
/// East/West.
pub fn direction_of(
    xi: (f64, f64),
    points: &[(WorldPoint, crate::color::ColorRgb)],
    delta: f64,
) -> Result<Direction> {
    if points.is_empty() {
        return Err(Error::EmptyObject);
    }
    let closest2 = points
        .iter()
        .map(|(p, _)| dist2_xy(xi, p.xy()))
        .fold(f64::INFINITY, f64::min);
    // min over squares, one sqrt at the end: identical to comparing the
    // nearest point's Euclidean distance against delta
    if closest2.sqrt() < delta {
        return Ok(Direction::OnTop);
    }
    let centroid = ground_centroid(points);
    Ok(quadrant(centroid.0 - xi.0, centroid.1 - xi.1))
}

/// Mean ground-plane position of a point set. Callers guarantee non-empty.
pub fn ground_centroid(points: &[(WorldPoint, crate::color::ColorRgb)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), (p, _)| (sx + p.x, sy + p.y));
    (sx / n, sy / n)
}

/// Quadrant classification of an offset (dx, dy), East on the |dx| = |dy| tie.
pub fn quadrant(dx: f64, dy: f64) -> Direction {
    if dx.abs() >= dy.abs() {
        if dx >= 0.0 {
            Direction::East
        } else {
            Direction::West
        }
    } else if dy >= 0.0 {
        Direction::North
    } else {
        Direction::South
    }
}

/// Default on-top radius in meters.
pub const DEFAULT_DELTA_M: f64 = 2.5;
