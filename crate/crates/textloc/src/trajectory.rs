//! Vehicle trajectory: an ordered list of ground-plane poses.

use std::path::Path;

use crate::error::{Error, Result};

/// Ordered xy poses along the acquisition path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub poses: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn new(poses: Vec<(f64, f64)>) -> Result<Self> {
        if poses.is_empty() {
            return Err(Error::EmptyTrajectory {
                path: "<memory>".into(),
            });
        }
        if let Some((x, y)) = poses.iter().find(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Config(format!("non-finite pose ({x}, {y})")));
        }
        Ok(Self { poses })
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }
}

/// Loads a trajectory from whitespace-separated `x y` lines.
/// Blank lines and `#` comments are skipped.
pub fn load_trajectory(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut poses = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<f64> {
            let tok = tok.ok_or_else(|| Error::Parse {
                path: path.into(),
                record: lineno + 1,
                message: "expected two columns `x y`".into(),
            })?;
            tok.parse::<f64>().map_err(|_| Error::Parse {
                path: path.into(),
                record: lineno + 1,
                message: format!("non-numeric token {tok:?}"),
            })
        };
        let x = parse(parts.next())?;
        let y = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(Error::Parse {
                path: path.into(),
                record: lineno + 1,
                message: "expected exactly two columns `x y`".into(),
            });
        }
        poses.push((x, y));
    }
    if poses.is_empty() {
        return Err(Error::EmptyTrajectory { path: path.into() });
    }
    Trajectory::new(poses)
}

/// Writes a trajectory as `x y` lines.
pub fn save_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (x, y) in &traj.poses {
        out.push_str(&format!("{x} {y}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
