//! Local map construction: center sampling, window cropping, stuff
//! clustering, and the object completeness rule.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::cloud::{InstancePoint, InstancePointCloud};
use crate::color::{mean_color, ColorRgb};
use crate::direction::ground_centroid;
use crate::error::{Error, Result};
use crate::geom::{dist2_xy, GeoReference, WorldPoint};
use crate::taxonomy::{LabelKind, Taxonomy};
use crate::trajectory::Trajectory;

/// DBSCAN parameters, with optional per-semantic overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub eps: f64,
    pub min_pts: usize,
    /// Per-semantic-label (eps, min_pts) overrides.
    #[serde(default)]
    pub overrides: BTreeMap<u16, (f64, usize)>,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            eps: 1.5,
            min_pts: 20,
            overrides: BTreeMap::new(),
        }
    }
}

impl ClusterParams {
    pub fn for_semantic(&self, semantic: u16) -> (f64, usize) {
        self.overrides
            .get(&semantic)
            .copied()
            .unwrap_or((self.eps, self.min_pts))
    }

    pub fn validate(&self) -> Result<()> {
        let mut all = vec![(self.eps, self.min_pts)];
        all.extend(self.overrides.values().copied());
        for (eps, min_pts) in all {
            if !(eps > 0.0) || min_pts < 1 {
                return Err(Error::Config(format!(
                    "cluster params require eps > 0 and min_pts >= 1, got ({eps}, {min_pts})"
                )));
            }
        }
        Ok(())
    }
}

/// A discrete instance inside one window: either a countable object kept
/// by the completeness rule, or one stuff cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    /// Node id within the map, assigned after ordering.
    pub id: u32,
    pub semantic: u16,
    pub kind: LabelKind,
    /// Raw instance id for objects; cluster ordinal for stuff.
    pub source_instance: u32,
    pub points: Vec<(WorldPoint, ColorRgb)>,
    mean_color: ColorRgb,
    centroid_xy: (f64, f64),
}

impl ObjectInstance {
    pub fn from_points(
        id: u32,
        semantic: u16,
        kind: LabelKind,
        source_instance: u32,
        points: Vec<(WorldPoint, ColorRgb)>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyObject);
        }
        let mean = mean_color(&points)?;
        let centroid = ground_centroid(&points);
        Ok(Self {
            id,
            semantic,
            kind,
            source_instance,
            points,
            mean_color: mean,
            centroid_xy: centroid,
        })
    }

    pub fn mean_color(&self) -> ColorRgb {
        self.mean_color
    }

    /// Ground-projected centroid of the instance's in-window points.
    pub fn centroid_xy(&self) -> (f64, f64) {
        self.centroid_xy
    }
}

/// An S x S meter window of discrete instances with georeference.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMap {
    pub id: u32,
    pub center: (f64, f64),
    pub side_m: f64,
    pub objects: Vec<ObjectInstance>,
}

impl LocalMap {
    pub fn georef(&self, width_px: u32, height_px: u32) -> Result<GeoReference> {
        GeoReference::new(self.center, self.side_m, width_px, height_px)
    }
}

/// Greedy distance-based subsampling of trajectory poses.
///
/// A pose is kept iff it is at least `min_spacing` meters from every
/// previously kept center; output preserves trajectory order.
pub fn sample_map_centers(traj: &Trajectory, min_spacing: f64) -> Result<Vec<(f64, f64)>> {
    if traj.poses.is_empty() {
        return Err(Error::EmptyTrajectory {
            path: "<memory>".into(),
        });
    }
    if !(min_spacing > 0.0) {
        return Err(Error::Config(format!(
            "min_spacing must be > 0, got {min_spacing}"
        )));
    }
    let min2 = min_spacing * min_spacing;
    let mut kept: Vec<(f64, f64)> = Vec::new();
    for &pose in &traj.poses {
        if kept.iter().all(|&c| dist2_xy(pose, c) >= min2) {
            kept.push(pose);
        }
    }
    Ok(kept)
}

/// Exactly the points with |x - cx| <= S/2 and |y - cy| <= S/2.
pub fn crop_window(
    cloud: &InstancePointCloud,
    center: (f64, f64),
    side_m: f64,
) -> Vec<&InstancePoint> {
    let half = side_m / 2.0;
    cloud
        .points
        .iter()
        .filter(|pt| (pt.p.x - center.0).abs() <= half && (pt.p.y - center.1).abs() <= half)
        .collect()
}

/// DBSCAN over 2D positions with a uniform-grid neighbor index.
///
/// Neighborhoods are closed (dist <= eps) and include the point itself.
/// Noise points are omitted. Clusters are returned with ascending member
/// indices and ordered by their minimum member index.
pub fn dbscan(points: &[(f64, f64)], eps: f64, min_pts: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let eps2 = eps * eps;

    // cell size = eps, so neighbors live in the 3x3 cell block
    let cell =
        |p: (f64, f64)| -> (i64, i64) { ((p.0 / eps).floor() as i64, (p.1 / eps).floor() as i64) };
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, &p) in points.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i);
    }
    let neighbors = |i: usize| -> Vec<usize> {
        let (cx, cy) = cell(points[i]);
        let mut out = Vec::new();
        for gx in cx - 1..=cx + 1 {
            for gy in cy - 1..=cy + 1 {
                if let Some(bucket) = grid.get(&(gx, gy)) {
                    for &j in bucket {
                        if dist2_xy(points[i], points[j]) <= eps2 {
                            out.push(j);
                        }
                    }
                }
            }
        }
        out
    };

    let mut labels: Vec<Option<u32>> = vec![None; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for seed in 0..n {
        if labels[seed].is_some() {
            continue;
        }
        let seed_neighbors = neighbors(seed);
        if seed_neighbors.len() < min_pts {
            continue; // not core; may still be claimed as a border point later
        }
        let cluster_id = clusters.len() as u32;
        labels[seed] = Some(cluster_id);
        let mut members = vec![seed];
        let mut frontier = seed_neighbors;
        while let Some(q) = frontier.pop() {
            if labels[q].is_some() {
                continue;
            }
            labels[q] = Some(cluster_id);
            members.push(q);
            let q_neighbors = neighbors(q);
            if q_neighbors.len() >= min_pts {
                frontier.extend(q_neighbors.into_iter().filter(|&r| labels[r].is_none()));
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }
    // stable ids: ascending minimum member index
    clusters.sort_by_key(|c| c[0]);
    clusters
}

/// Groups one stuff label's in-window points into discrete instances.
///
/// DBSCAN runs on the ground projection; noise points are dropped and
/// cluster ordinals follow ascending minimum point index. All points
/// must share one stuff semantic label.
pub fn cluster_stuff(
    points: &[&InstancePoint],
    eps: f64,
    min_pts: usize,
) -> Result<Vec<ObjectInstance>> {
    if points.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(pt) = points.iter().find(|p| p.semantic != points[0].semantic) {
        return Err(Error::Config(format!(
            "cluster_stuff expects one label, got {} and {}",
            points[0].semantic, pt.semantic
        )));
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|p| p.p.xy()).collect();
    dbscan(&xy, eps, min_pts)
        .into_iter()
        .enumerate()
        .map(|(ordinal, members)| {
            let cluster_points: Vec<(WorldPoint, ColorRgb)> = members
                .iter()
                .map(|&i| (points[i].p, points[i].c))
                .collect();
            ObjectInstance::from_points(
                0,
                points[0].semantic,
                LabelKind::Stuff,
                ordinal as u32,
                cluster_points,
            )
        })
        .collect()
}

/// An object-kind instance before the completeness check.
#[derive(Debug, Clone)]
pub struct ObjectCandidate {
    pub semantic: u16,
    pub instance: u32,
    pub inside_points: Vec<(WorldPoint, ColorRgb)>,
    /// Point count of this instance in the whole loaded cloud.
    pub total_points: usize,
}

/// Keeps object candidates with at least one-third of their points inside
/// the window. The boundary is inclusive: 3 of 9 points is kept.
pub fn filter_objects(candidates: Vec<ObjectCandidate>) -> Vec<ObjectCandidate> {
    candidates
        .into_iter()
        .filter(|c| 3 * c.inside_points.len() >= c.total_points)
        .collect()
}

/// Map construction settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapConfig {
    pub side_m: f64,
    pub cluster: ClusterParams,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            side_m: 50.0,
            cluster: ClusterParams::default(),
        }
    }
}

/// Builds local maps from one loaded cloud; immutable and shareable
/// across threads for disjoint centers.
pub struct MapBuilder<'a> {
    cloud: &'a InstancePointCloud,
    taxonomy: &'a Taxonomy,
    config: MapConfig,
    /// Whole-cloud point counts per (semantic, instance), objects only.
    instance_totals: HashMap<(u16, u32), usize>,
}

impl<'a> MapBuilder<'a> {
    pub fn new(
        cloud: &'a InstancePointCloud,
        taxonomy: &'a Taxonomy,
        config: MapConfig,
    ) -> Result<Self> {
        if !(config.side_m > 0.0) {
            return Err(Error::Config(format!(
                "side_m must be > 0, got {}",
                config.side_m
            )));
        }
        config.cluster.validate()?;
        let mut instance_totals = HashMap::new();
        for pt in &cloud.points {
            if taxonomy.kind(pt.semantic) == Some(LabelKind::Object) && pt.instance != 0 {
                *instance_totals
                    .entry((pt.semantic, pt.instance))
                    .or_insert(0) += 1;
            }
        }
        Ok(Self {
            cloud,
            taxonomy,
            config,
            instance_totals,
        })
    }

    pub fn config(&self) -> &MapConfig {
        &self.config
    }

    pub fn cloud(&self) -> &InstancePointCloud {
        self.cloud
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        self.taxonomy
    }

    /// Builds the map at `center`, or `None` when no instance survives.
    ///
    /// Pipeline: crop the closed window, split by label kind, cluster
    /// stuff per semantic label, apply the one-third rule to objects,
    /// then order instances (objects first, then by semantic and source
    /// id) and assign sequential node ids.
    pub fn build(&self, map_id: u32, center: (f64, f64)) -> Result<Option<LocalMap>> {
        let window = crop_window(self.cloud, center, self.config.side_m);

        let mut object_groups: BTreeMap<(u16, u32), Vec<(WorldPoint, ColorRgb)>> = BTreeMap::new();
        let mut stuff_groups: BTreeMap<u16, Vec<&InstancePoint>> = BTreeMap::new();
        for pt in window {
            match self.taxonomy.kind(pt.semantic) {
                Some(LabelKind::Object) => {
                    // instance 0 carries no identity; such points cannot
                    // form a countable object
                    if pt.instance != 0 {
                        object_groups
                            .entry((pt.semantic, pt.instance))
                            .or_default()
                            .push((pt.p, pt.c));
                    }
                }
                Some(LabelKind::Stuff) => {
                    stuff_groups.entry(pt.semantic).or_default().push(pt);
                }
                None => {
                    return Err(Error::Config(format!(
                        "point with semantic {} missing from taxonomy",
                        pt.semantic
                    )))
                }
            }
        }

        let candidates: Vec<ObjectCandidate> = object_groups
            .into_iter()
            .map(|((semantic, instance), inside_points)| ObjectCandidate {
                semantic,
                instance,
                total_points: self.instance_totals[&(semantic, instance)],
                inside_points,
            })
            .collect();
        let retained = filter_objects(candidates);

        let mut instances: Vec<ObjectInstance> = Vec::new();
        for cand in retained {
            instances.push(ObjectInstance::from_points(
                0,
                cand.semantic,
                LabelKind::Object,
                cand.instance,
                cand.inside_points,
            )?);
        }
        for (semantic, pts) in stuff_groups {
            let (eps, min_pts) = self.config.cluster.for_semantic(semantic);
            instances.extend(cluster_stuff(&pts, eps, min_pts)?);
        }

        if instances.is_empty() {
            return Ok(None);
        }
        instances.sort_by_key(|o| {
            (
                matches!(o.kind, LabelKind::Stuff),
                o.semantic,
                o.source_instance,
            )
        });
        for (i, obj) in instances.iter_mut().enumerate() {
            obj.id = i as u32;
        }
        Ok(Some(LocalMap {
            id: map_id,
            center,
            side_m: self.config.side_m,
            objects: instances,
        }))
    }

    /// Axis-aligned grid sampling over the cloud's bounding box, keeping
    /// centers whose map holds strictly more than `min_objects` instances.
    /// Centers are visited row-major: y ascending, then x ascending.
    pub fn grid_sample_centers(&self, pitch: f64, min_objects: usize) -> Result<Vec<(f64, f64)>> {
        if !(pitch > 0.0) {
            return Err(Error::Config(format!(
                "grid pitch must be > 0, got {pitch}"
            )));
        }
        let Some(((min_x, min_y), (max_x, max_y))) = self.cloud.bounds_xy() else {
            return Ok(Vec::new());
        };
        let mut centers = Vec::new();
        let steps = |lo: f64, hi: f64| ((hi - lo) / pitch).floor() as usize + 1;
        for iy in 0..steps(min_y, max_y) {
            let y = min_y + iy as f64 * pitch;
            for ix in 0..steps(min_x, max_x) {
                let x = min_x + ix as f64 * pitch;
                if let Some(map) = self.build(0, (x, y))? {
                    if map.objects.len() > min_objects {
                        centers.push((x, y));
                    }
                }
            }
        }
        Ok(centers)
    }
}
