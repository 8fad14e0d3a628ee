//! Query synthesis: sample query locations, build pose cells, and render
//! templated hints with ground-truth assignments.

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::color::{nearest_palette_color, ColorPalette};
use crate::direction::{direction_of, Direction};
use crate::error::{Error, Result};
use crate::map_builder::{LocalMap, MapBuilder, ObjectInstance};
use crate::pna::{label_query, Assignment, TauConfig};
use crate::rng;

/// One templated sentence describing an object relative to the pose.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hint {
    pub text: String,
    pub semantic: String,
    pub color: String,
    pub direction: Direction,
}

/// A query: ground-truth pose, its hints, and their assignments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: u64,
    pub map_id: u32,
    pub xi: (f64, f64),
    pub hints: Vec<Hint>,
    pub gt_assignments: Vec<Assignment>,
}

/// The window centered at the query location, built exactly like a map.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseCell {
    pub xi: (f64, f64),
    pub side_m: f64,
    pub objects: Vec<ObjectInstance>,
}

/// Query generation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryGenConfig {
    /// Hints per query (N_t).
    pub hints_per_query: usize,
    /// Query positions sampled per map center.
    pub queries_per_center: usize,
    /// Half-width of the uniform square perturbation, meters.
    pub query_radius_m: f64,
    /// On-top radius, meters.
    pub delta_m: f64,
    pub tau: TauConfig,
}

impl Default for QueryGenConfig {
    fn default() -> Self {
        Self {
            hints_per_query: 6,
            queries_per_center: 4,
            query_radius_m: 15.0,
            delta_m: crate::direction::DEFAULT_DELTA_M,
            tau: TauConfig::default(),
        }
    }
}

pub const HINT_PREFIX: &str = "The pose is ";

/// Renders the hint template for one pose-cell object.
pub fn render_hint(
    object: &ObjectInstance,
    xi: (f64, f64),
    semantic_name: &str,
    palette: &ColorPalette,
    delta: f64,
) -> Result<Hint> {
    let direction = direction_of(xi, &object.points, delta)?;
    let color = nearest_palette_color(object.mean_color(), palette).to_owned();
    let text = format!(
        "{HINT_PREFIX}{} of {} {}.",
        direction.word(),
        color,
        semantic_name
    );
    Ok(Hint {
        text,
        semantic: semantic_name.to_owned(),
        color,
        direction,
    })
}

/// Recovers (direction, color, semantic) from rendered hint text.
///
/// Color names are single tokens (validated at palette construction), so
/// the first word after the direction is the color and the remainder is
/// the semantic name.
pub fn parse_hint(text: &str) -> Result<Hint> {
    let fail = |msg: &str| Error::Config(format!("unparseable hint {text:?}: {msg}"));
    let rest = text
        .strip_prefix(HINT_PREFIX)
        .ok_or_else(|| fail("missing template prefix"))?;
    let rest = rest
        .strip_suffix('.')
        .ok_or_else(|| fail("missing trailing period"))?;
    let (dir_word, rest) = rest
        .split_once(" of ")
        .ok_or_else(|| fail("missing ` of `"))?;
    let direction = Direction::from_word(dir_word).ok_or_else(|| fail("unknown direction"))?;
    let (color, semantic) = rest
        .split_once(' ')
        .ok_or_else(|| fail("missing semantic"))?;
    if semantic.is_empty() {
        return Err(fail("empty semantic"));
    }
    Ok(Hint {
        text: text.to_owned(),
        semantic: semantic.to_owned(),
        color: color.to_owned(),
        direction,
    })
}

/// Samples query locations by perturbing the center within a uniform
/// square of half-width `radius`.
pub fn sample_query_locations(
    center: (f64, f64),
    count: usize,
    radius: f64,
    rng: &mut impl RngCore,
) -> Vec<(f64, f64)> {
    (0..count)
        .map(|_| {
            let dx = rng::range_f64(rng, -radius, radius);
            let dy = rng::range_f64(rng, -radius, radius);
            (center.0 + dx, center.1 + dy)
        })
        .collect()
}

/// Builds the pose cell at `xi` with the map-construction pipeline.
pub fn build_pose_cell(builder: &MapBuilder, xi: (f64, f64)) -> Result<Option<PoseCell>> {
    Ok(builder.build(0, xi)?.map(|m| PoseCell {
        xi,
        side_m: m.side_m,
        objects: m.objects,
    }))
}

/// Uniform ordered sample of `n` distinct cell objects, or `None` when
/// the cell holds fewer than `n` (such cells are skipped, not padded).
pub fn select_hint_objects<'c>(
    cell: &'c PoseCell,
    n: usize,
    rng: &mut impl RngCore,
) -> Option<Vec<&'c ObjectInstance>> {
    if cell.objects.len() < n {
        return None;
    }
    let idx = rng::sample_indices(rng, cell.objects.len(), n);
    Some(idx.into_iter().map(|i| &cell.objects[i]).collect())
}

/// Generates one query at `xi`: pose cell, hint selection, rendering in
/// selection order, and ground-truth assignments against the map.
/// Returns `None` when the cell is empty or holds fewer than N_t objects.
pub fn generate_query(
    builder: &MapBuilder,
    map: &LocalMap,
    query_id: u64,
    xi: (f64, f64),
    config: &QueryGenConfig,
    palette: &ColorPalette,
    rng: &mut impl RngCore,
) -> Result<Option<Query>> {
    let Some(cell) = build_pose_cell(builder, xi)? else {
        return Ok(None);
    };
    let Some(selected) = select_hint_objects(&cell, config.hints_per_query, rng) else {
        return Ok(None);
    };

    let mut hints = Vec::with_capacity(selected.len());
    let mut sources = Vec::with_capacity(selected.len());
    for object in selected {
        let name = builder
            .taxonomy()
            .display_name(object.semantic)
            .ok_or_else(|| {
                Error::Config(format!("semantic {} not in taxonomy", object.semantic))
            })?;
        hints.push(render_hint(object, xi, &name, palette, config.delta_m)?);
        sources.push((object, name));
    }
    let gt_assignments = label_query(&sources, map, &config.tau);
    Ok(Some(Query {
        query_id,
        map_id: map.id,
        xi,
        hints,
        gt_assignments,
    }))
}
