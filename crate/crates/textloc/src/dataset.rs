//! On-disk dataset layout with a manifest for integrity checking.
//!
//! ```text
//! <root>/
//!   manifest.json          seed, config hash, counts, completed stages
//!   maps/map_00000/map.json
//!   maps/map_00000/bev.png            (after render)
//!   maps/map_00000/scene_graph.json   (after render)
//!   queries.jsonl
//!   labels.jsonl                       (after label)
//!   predictions.jsonl                  (after localize)
//!   report.json / report.csv / buckets.csv (after evaluate)
//! ```
//!
//! All JSON is emitted with a fixed field order and JSONL lines are
//! sorted by (map id, query id), so identical inputs produce identical
//! bytes regardless of worker count.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::color::ColorRgb;
use crate::error::{Error, Result};
use crate::geom::WorldPoint;
use crate::localize::LocalizationResult;
use crate::map_builder::{LocalMap, ObjectInstance};
use crate::pna::Assignment;
use crate::query_gen::Query;
use crate::taxonomy::LabelKind;

/// Paths inside one dataset root.
#[derive(Debug, Clone)]
pub struct DatasetPaths {
    pub root: PathBuf,
}

impl DatasetPaths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn maps_dir(&self) -> PathBuf {
        self.root.join("maps")
    }

    pub fn map_dir(&self, id: u32) -> PathBuf {
        self.maps_dir().join(format!("map_{id:05}"))
    }

    pub fn map_json(&self, id: u32) -> PathBuf {
        self.map_dir(id).join("map.json")
    }

    pub fn bev_png(&self, id: u32) -> PathBuf {
        self.map_dir(id).join("bev.png")
    }

    pub fn scene_graph_json(&self, id: u32) -> PathBuf {
        self.map_dir(id).join("scene_graph.json")
    }

    pub fn queries_jsonl(&self) -> PathBuf {
        self.root.join("queries.jsonl")
    }

    pub fn labels_jsonl(&self) -> PathBuf {
        self.root.join("labels.jsonl")
    }

    pub fn predictions_jsonl(&self) -> PathBuf {
        self.root.join("predictions.jsonl")
    }

    pub fn report_json(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn report_csv(&self) -> PathBuf {
        self.root.join("report.csv")
    }

    pub fn buckets_csv(&self) -> PathBuf {
        self.root.join("buckets.csv")
    }
}

/// Which pipeline stages have produced their artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Stages {
    pub maps: bool,
    pub queries: bool,
    pub rendered: bool,
    pub labeled: bool,
    pub localized: bool,
}

fn default_raster_px() -> u32 {
    224
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub config_hash: String,
    /// Raster side used for georeferences and renders (H = W).
    #[serde(default = "default_raster_px")]
    pub raster_px: u32,
    pub n_maps: usize,
    pub n_queries: usize,
    pub stages: Stages,
    /// The resolved pipeline configuration, embedded for provenance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl Manifest {
    pub fn save(&self, paths: &DatasetPaths) -> Result<()> {
        std::fs::create_dir_all(&paths.root).map_err(|e| Error::io(&paths.root, e))?;
        let path = paths.manifest();
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(paths: &DatasetPaths) -> Result<Self> {
        let path = paths.manifest();
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    id: u32,
    center: (f64, f64),
    side_m: f64,
    georef: crate::geom::GeoReference,
    objects: Vec<ObjectJson>,
}

#[derive(Serialize, Deserialize)]
struct ObjectJson {
    id: u32,
    semantic: u16,
    kind: LabelKind,
    source_instance: u32,
    mean_color: [u8; 3],
    centroid: [f64; 2],
    /// Base64 of packed little-endian records: f64 x, y, z; u8 r, g, b.
    points_b64: String,
}

const POINT_RECORD_BYTES: usize = 27;

fn encode_points(points: &[(WorldPoint, ColorRgb)]) -> String {
    let mut buf = Vec::with_capacity(points.len() * POINT_RECORD_BYTES);
    for (p, c) in points {
        buf.extend_from_slice(&p.x.to_le_bytes());
        buf.extend_from_slice(&p.y.to_le_bytes());
        buf.extend_from_slice(&p.z.to_le_bytes());
        buf.extend_from_slice(&[c.r, c.g, c.b]);
    }
    base64::engine::general_purpose::STANDARD.encode(buf)
}

fn decode_points(b64: &str, path: &Path) -> Result<Vec<(WorldPoint, ColorRgb)>> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(b64)
        .map_err(|e| Error::Integrity(format!("{}: bad base64 point blob: {e}", path.display())))?;
    if bytes.len() % POINT_RECORD_BYTES != 0 {
        return Err(Error::Integrity(format!(
            "{}: point blob length {} is not a record multiple",
            path.display(),
            bytes.len()
        )));
    }
    let mut points = Vec::with_capacity(bytes.len() / POINT_RECORD_BYTES);
    for rec in bytes.chunks_exact(POINT_RECORD_BYTES) {
        let f = |i: usize| f64::from_le_bytes(rec[i..i + 8].try_into().unwrap());
        points.push((
            WorldPoint::new(f(0), f(8), f(16)),
            ColorRgb::new(rec[24], rec[25], rec[26]),
        ));
    }
    Ok(points)
}

pub fn save_map(map: &LocalMap, raster_px: u32, paths: &DatasetPaths) -> Result<()> {
    let dir = paths.map_dir(map.id);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let json = MapJson {
        id: map.id,
        center: map.center,
        side_m: map.side_m,
        georef: map.georef(raster_px, raster_px)?,
        objects: map
            .objects
            .iter()
            .map(|o| ObjectJson {
                id: o.id,
                semantic: o.semantic,
                kind: o.kind,
                source_instance: o.source_instance,
                mean_color: [o.mean_color().r, o.mean_color().g, o.mean_color().b],
                centroid: [o.centroid_xy().0, o.centroid_xy().1],
                points_b64: encode_points(&o.points),
            })
            .collect(),
    };
    let path = paths.map_json(map.id);
    let text = serde_json::to_string_pretty(&json).expect("map serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_map(paths: &DatasetPaths, id: u32) -> Result<LocalMap> {
    let path = paths.map_json(id);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let json: MapJson = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    if json.georef.center != json.center || json.georef.side_m != json.side_m {
        return Err(Error::Integrity(format!(
            "{}: embedded georeference disagrees with the map window",
            path.display()
        )));
    }
    let mut objects = Vec::with_capacity(json.objects.len());
    for o in json.objects {
        let points = decode_points(&o.points_b64, &path)?;
        let obj = ObjectInstance::from_points(o.id, o.semantic, o.kind, o.source_instance, points)?;
        // stored caches must agree with recomputation
        let stored_mean = ColorRgb::new(o.mean_color[0], o.mean_color[1], o.mean_color[2]);
        if stored_mean != obj.mean_color() {
            return Err(Error::Integrity(format!(
                "{}: object {} cached mean color disagrees with points",
                path.display(),
                o.id
            )));
        }
        let (cx, cy) = obj.centroid_xy();
        if o.centroid != [cx, cy] {
            return Err(Error::Integrity(format!(
                "{}: object {} cached centroid disagrees with points",
                path.display(),
                o.id
            )));
        }
        objects.push(obj);
    }
    Ok(LocalMap {
        id: json.id,
        center: json.center,
        side_m: json.side_m,
        objects,
    })
}

fn write_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).expect("jsonl item serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.into(),
            record: lineno + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

/// Writes queries sorted by (map id, query id).
pub fn save_queries(queries: &[Query], paths: &DatasetPaths) -> Result<()> {
    let mut sorted: Vec<&Query> = queries.iter().collect();
    sorted.sort_by_key(|q| (q.map_id, q.query_id));
    write_jsonl(&sorted, &paths.queries_jsonl())
}

pub fn load_queries(paths: &DatasetPaths) -> Result<Vec<Query>> {
    read_jsonl(&paths.queries_jsonl())
}

/// One `label` run record: assignments for a query under a strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub query_id: u64,
    pub map_id: u32,
    pub strategy: String,
    pub assignments: Vec<Assignment>,
}

pub fn save_labels(labels: &[LabelRecord], paths: &DatasetPaths) -> Result<()> {
    let mut sorted: Vec<&LabelRecord> = labels.iter().collect();
    sorted.sort_by_key(|l| (l.map_id, l.query_id));
    write_jsonl(&sorted, &paths.labels_jsonl())
}

pub fn load_labels(paths: &DatasetPaths) -> Result<Vec<LabelRecord>> {
    read_jsonl(&paths.labels_jsonl())
}

pub fn save_predictions(results: &[LocalizationResult], paths: &DatasetPaths) -> Result<()> {
    let mut sorted: Vec<&LocalizationResult> = results.iter().collect();
    sorted.sort_by_key(|r| r.query_id);
    write_jsonl(&sorted, &paths.predictions_jsonl())
}

pub fn load_predictions(paths: &DatasetPaths) -> Result<Vec<LocalizationResult>> {
    read_jsonl(&paths.predictions_jsonl())
}

/// An in-memory dataset: manifest, maps, and queries.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: Manifest,
    pub maps: Vec<LocalMap>,
    pub queries: Vec<Query>,
}

/// Persists a dataset; map and query order is normalized on write.
pub fn write_dataset(dataset: &Dataset, paths: &DatasetPaths) -> Result<()> {
    std::fs::create_dir_all(&paths.root).map_err(|e| Error::io(&paths.root, e))?;
    for map in &dataset.maps {
        save_map(map, dataset.manifest.raster_px, paths)?;
    }
    save_queries(&dataset.queries, paths)?;
    dataset.manifest.save(paths)?;
    Ok(())
}

/// Loads a dataset, verifying manifest counts, query references, and the
/// presence of every artifact recorded as produced.
pub fn read_dataset(paths: &DatasetPaths) -> Result<Dataset> {
    let manifest = Manifest::load(paths)?;
    let map_ids = list_map_ids(paths)?;
    if map_ids.len() != manifest.n_maps {
        return Err(Error::Integrity(format!(
            "manifest declares {} maps but {} map directories exist",
            manifest.n_maps,
            map_ids.len()
        )));
    }
    let mut maps = Vec::with_capacity(map_ids.len());
    for &id in &map_ids {
        maps.push(load_map(paths, id)?);
    }
    let queries = if manifest.stages.queries {
        load_queries(paths)?
    } else {
        Vec::new()
    };
    if manifest.stages.queries && queries.len() != manifest.n_queries {
        return Err(Error::Integrity(format!(
            "manifest declares {} queries but {} lines exist",
            manifest.n_queries,
            queries.len()
        )));
    }
    for q in &queries {
        if !map_ids.contains(&q.map_id) {
            return Err(Error::Integrity(format!(
                "query {} references missing map {}",
                q.query_id, q.map_id
            )));
        }
    }
    if manifest.stages.rendered {
        for &id in &map_ids {
            for path in [paths.bev_png(id), paths.scene_graph_json(id)] {
                if !path.exists() {
                    return Err(Error::Integrity(format!(
                        "rendered artifact missing: {}",
                        path.display()
                    )));
                }
            }
        }
    }
    if manifest.stages.labeled && !paths.labels_jsonl().exists() {
        return Err(Error::Integrity("labels.jsonl missing".into()));
    }
    if manifest.stages.localized && !paths.predictions_jsonl().exists() {
        return Err(Error::Integrity("predictions.jsonl missing".into()));
    }
    Ok(Dataset {
        manifest,
        maps,
        queries,
    })
}

/// Map ids present on disk, ascending.
pub fn list_map_ids(paths: &DatasetPaths) -> Result<Vec<u32>> {
    let dir = paths.maps_dir();
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut ids = Vec::new();
    for entry in std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
        let entry = entry.map_err(|e| Error::io(&dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(num) = name.strip_prefix("map_") {
            if let Ok(id) = num.parse::<u32>() {
                if paths.map_json(id).exists() {
                    ids.push(id);
                }
            }
        }
    }
    ids.sort_unstable();
    Ok(ids)
}
