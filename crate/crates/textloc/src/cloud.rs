//! Instance-annotated point clouds and their on-disk format.
//!
//! The canonical input is a little-endian binary columnar file:
//! a 4-byte magic `TLPC`, a u64 point count, then one 21-byte record per
//! point: f32 x, y, z; u8 r, g, b; u16 semantic id; u32 instance id.
//! Instance id 0 marks unassigned points (raw stuff before clustering).

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::color::ColorRgb;
use crate::error::{Error, Result};
use crate::geom::WorldPoint;
use crate::taxonomy::Taxonomy;

pub const MAGIC: [u8; 4] = *b"TLPC";
pub const RECORD_BYTES: usize = 21;

/// One annotated point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstancePoint {
    pub p: WorldPoint,
    pub c: ColorRgb,
    pub semantic: u16,
    /// 0 = unassigned (stuff points before window clustering).
    pub instance: u32,
}

/// The raw annotated world.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InstancePointCloud {
    pub points: Vec<InstancePoint>,
}

impl InstancePointCloud {
    pub fn new(points: Vec<InstancePoint>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Ground-plane bounding box as ((min_x, min_y), (max_x, max_y)).
    pub fn bounds_xy(&self) -> Option<((f64, f64), (f64, f64))> {
        if self.points.is_empty() {
            return None;
        }
        let mut min = (f64::INFINITY, f64::INFINITY);
        let mut max = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for pt in &self.points {
            min.0 = min.0.min(pt.p.x);
            min.1 = min.1.min(pt.p.y);
            max.0 = max.0.max(pt.p.x);
            max.1 = max.1.max(pt.p.y);
        }
        Some((min, max))
    }
}

fn encode_record(pt: &InstancePoint, buf: &mut [u8; RECORD_BYTES]) {
    buf[0..4].copy_from_slice(&(pt.p.x as f32).to_le_bytes());
    buf[4..8].copy_from_slice(&(pt.p.y as f32).to_le_bytes());
    buf[8..12].copy_from_slice(&(pt.p.z as f32).to_le_bytes());
    buf[12] = pt.c.r;
    buf[13] = pt.c.g;
    buf[14] = pt.c.b;
    buf[15..17].copy_from_slice(&pt.semantic.to_le_bytes());
    buf[17..21].copy_from_slice(&pt.instance.to_le_bytes());
}

fn decode_record(buf: &[u8; RECORD_BYTES]) -> InstancePoint {
    let f = |i: usize| f32::from_le_bytes(buf[i..i + 4].try_into().unwrap()) as f64;
    InstancePoint {
        p: WorldPoint::new(f(0), f(4), f(8)),
        c: ColorRgb::new(buf[12], buf[13], buf[14]),
        semantic: u16::from_le_bytes(buf[15..17].try_into().unwrap()),
        instance: u32::from_le_bytes(buf[17..21].try_into().unwrap()),
    }
}

/// Writes a cloud in the canonical binary format.
pub fn save_point_cloud(cloud: &InstancePointCloud, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(&MAGIC).map_err(io_err)?;
    w.write_all(&(cloud.points.len() as u64).to_le_bytes())
        .map_err(io_err)?;
    let mut buf = [0u8; RECORD_BYTES];
    for pt in &cloud.points {
        encode_record(pt, &mut buf);
        w.write_all(&buf).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Loads a cloud, validating every record against the taxonomy.
///
/// Records are validated in order; a truncated record or an unknown
/// semantic id is reported with its 1-based record number.
pub fn load_point_cloud(path: &Path, taxonomy: &Taxonomy) -> Result<InstancePointCloud> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| Error::Parse {
        path: path.into(),
        record: 0,
        message: "file too short for header".into(),
    })?;
    if magic != MAGIC {
        return Err(Error::Parse {
            path: path.into(),
            record: 0,
            message: format!("bad magic {magic:?}, expected {MAGIC:?}"),
        });
    }
    let mut count_buf = [0u8; 8];
    r.read_exact(&mut count_buf).map_err(|_| Error::Parse {
        path: path.into(),
        record: 0,
        message: "file too short for point count".into(),
    })?;
    let count = u64::from_le_bytes(count_buf) as usize;

    let mut points = Vec::with_capacity(count);
    let mut buf = [0u8; RECORD_BYTES];
    for record in 1..=count {
        r.read_exact(&mut buf).map_err(|_| Error::Parse {
            path: path.into(),
            record,
            message: format!("truncated record, expected {RECORD_BYTES} bytes"),
        })?;
        let pt = decode_record(&buf);
        if !pt.p.is_finite() {
            return Err(Error::Parse {
                path: path.into(),
                record,
                message: "non-finite coordinates".into(),
            });
        }
        if taxonomy.get(pt.semantic).is_none() {
            return Err(Error::UnknownLabel {
                path: path.into(),
                record,
                label: pt.semantic,
            });
        }
        points.push(pt);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::Parse {
            path: path.into(),
            record: count + 1,
            message: "trailing bytes after declared point count".into(),
        });
    }
    Ok(InstancePointCloud::new(points))
}
