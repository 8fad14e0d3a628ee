//! Localizers: a deterministic constraint-grid oracle and a client for an
//! external vision-language endpoint, sharing one result type.

mod client;
mod protocol;

pub use client::{vlm_localize, EndpointConfig};
pub use protocol::{
    assemble_prompt, load_system_prompt, parse_model_output, serialize_prediction, MalformedOutput,
    ModelPrediction, DEFAULT_SYSTEM_PROMPT,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::{nearest_palette_color, ColorPalette};
use crate::direction::direction_of;
use crate::error::{Error, Result};
use crate::geom::{world_to_pixel, PixelCoord};
use crate::map_builder::{LocalMap, ObjectInstance};
use crate::pna::Assignment;
use crate::query_gen::{parse_hint, Hint};
use crate::taxonomy::Taxonomy;

/// Which localizer produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Oracle,
    Vlm,
}

/// Result record for one query. A failed call leaves the prediction
/// fields empty and `failure` set; evaluation scores it as infinite error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationResult {
    pub query_id: u64,
    pub method: Method,
    pub predicted_pixel: Option<PixelCoord>,
    pub predicted_world: Option<(f64, f64)>,
    pub assignments: Option<Vec<Assignment>>,
    pub raw_output: Option<String>,
    pub failure: Option<String>,
}

impl LocalizationResult {
    pub fn failed(query_id: u64, method: Method, reason: String, raw: Option<String>) -> Self {
        Self {
            query_id,
            method,
            predicted_pixel: None,
            predicted_world: None,
            assignments: None,
            raw_output: raw,
            failure: Some(reason),
        }
    }
}

/// Candidate grid spacing for the oracle, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub pitch_m: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { pitch_m: 0.5 }
    }
}

fn satisfies(
    candidate: (f64, f64),
    hint: &Hint,
    object: &ObjectInstance,
    names: &[String],
    palette: &ColorPalette,
    delta: f64,
) -> bool {
    names[object.id as usize] == hint.semantic
        && nearest_palette_color(object.mean_color(), palette) == hint.color
        && direction_of(candidate, &object.points, delta).ok() == Some(hint.direction)
}

fn display_names(map: &LocalMap, taxonomy: &Taxonomy) -> Result<Vec<String>> {
    map.objects
        .iter()
        .map(|o| {
            taxonomy
                .display_name(o.semantic)
                .ok_or_else(|| Error::Config(format!("semantic {} not in taxonomy", o.semantic)))
        })
        .collect()
}

/// Number of hints satisfiable at `candidate`: a hint counts when some
/// map object matches its semantic and color and lies in its stated
/// direction from the candidate.
pub fn oracle_score(
    candidate: (f64, f64),
    hint_texts: &[String],
    map: &LocalMap,
    taxonomy: &Taxonomy,
    palette: &ColorPalette,
    delta: f64,
) -> Result<usize> {
    let hints: Vec<Hint> = hint_texts
        .iter()
        .map(|t| parse_hint(t))
        .collect::<Result<_>>()?;
    let names = display_names(map, taxonomy)?;
    Ok(hints
        .iter()
        .filter(|h| {
            map.objects
                .iter()
                .any(|o| satisfies(candidate, h, o, &names, palette, delta))
        })
        .count())
}

/// Exhaustive constraint-grid localization.
///
/// Scores every grid candidate over the S x S window and predicts the
/// centroid of the argmax set, reported both in world meters and on the
/// `raster_px` BEV raster. Deterministic for fixed inputs and any thread
/// count.
#[allow(clippy::too_many_arguments)]
pub fn oracle_localize(
    query_id: u64,
    map: &LocalMap,
    hint_texts: &[String],
    grid: &GridConfig,
    taxonomy: &Taxonomy,
    palette: &ColorPalette,
    delta: f64,
    raster_px: u32,
) -> Result<LocalizationResult> {
    if !(grid.pitch_m > 0.0) || grid.pitch_m > map.side_m {
        return Err(Error::Config(format!(
            "grid pitch must be in (0, side_m], got {}",
            grid.pitch_m
        )));
    }
    let hints: Vec<Hint> = hint_texts
        .iter()
        .map(|t| parse_hint(t))
        .collect::<Result<_>>()?;
    let names = display_names(map, taxonomy)?;

    // semantic and color matching is candidate-independent
    let per_hint_objects: Vec<Vec<&ObjectInstance>> = hints
        .iter()
        .map(|h| {
            map.objects
                .iter()
                .filter(|o| {
                    names[o.id as usize] == h.semantic
                        && nearest_palette_color(o.mean_color(), palette) == h.color
                })
                .collect()
        })
        .collect();

    let half = map.side_m / 2.0;
    let steps = (map.side_m / grid.pitch_m + 1e-9).floor() as usize + 1;
    let axis: Vec<f64> = (0..steps)
        .map(|i| -half + i as f64 * grid.pitch_m)
        .filter(|off| off.abs() <= half + 1e-9)
        .collect();

    let scores: Vec<(f64, f64, usize)> = axis
        .par_iter()
        .flat_map_iter(|&oy| {
            let hints = &hints;
            let per_hint_objects = &per_hint_objects;
            axis.iter().map(move |&ox| {
                let candidate = (map.center.0 + ox, map.center.1 + oy);
                let score = hints
                    .iter()
                    .zip(per_hint_objects)
                    .filter(|(h, objs)| {
                        objs.iter().any(|o| {
                            direction_of(candidate, &o.points, delta).ok() == Some(h.direction)
                        })
                    })
                    .count();
                (candidate.0, candidate.1, score)
            })
        })
        .collect();

    let best = scores.iter().map(|&(_, _, s)| s).max().unwrap_or(0);
    let argmax: Vec<(f64, f64)> = scores
        .iter()
        .filter(|&&(_, _, s)| s == best)
        .map(|&(x, y, _)| (x, y))
        .collect();
    let n = argmax.len() as f64;
    let predicted = argmax
        .iter()
        .fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x, sy + y));
    let predicted_world = (predicted.0 / n, predicted.1 / n);

    let georef = map.georef(raster_px, raster_px)?;
    let (predicted_pixel, _) = world_to_pixel(predicted_world, &georef);
    let assignments = assignments_at(predicted_world, &hints, map, &names, palette, delta);

    Ok(LocalizationResult {
        query_id,
        method: Method::Oracle,
        predicted_pixel: Some(predicted_pixel),
        predicted_world: Some(predicted_world),
        assignments: Some(assignments),
        raw_output: None,
        failure: None,
    })
}

/// Per-hint assignment implied by the predicted position: the lowest-id
/// object satisfying all three constraints there, if any.
fn assignments_at(
    candidate: (f64, f64),
    hints: &[Hint],
    map: &LocalMap,
    names: &[String],
    palette: &ColorPalette,
    delta: f64,
) -> Vec<Assignment> {
    hints
        .iter()
        .map(|h| {
            let node = map
                .objects
                .iter()
                .find(|o| satisfies(candidate, h, o, names, palette, delta));
            match node {
                Some(o) => Assignment::grounded(h.semantic.clone(), o.id),
                None => Assignment::ungrounded(h.semantic.clone()),
            }
        })
        .collect()
}
