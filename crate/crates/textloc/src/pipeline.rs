//! Stage orchestration over the dataset layout, with a single resolved
//! configuration carrying every tunable and its default.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{load_point_cloud, InstancePointCloud};
use crate::color::ColorPalette;
use crate::dataset::{
    list_map_ids, load_map, load_predictions, load_queries, save_labels, save_map,
    save_predictions, save_queries, DatasetPaths, LabelRecord, Manifest, Stages,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport};
use crate::localize::{
    oracle_localize, vlm_localize, EndpointConfig, GridConfig, LocalizationResult, Method,
    DEFAULT_SYSTEM_PROMPT,
};
use crate::map_builder::{sample_map_centers, ClusterParams, LocalMap, MapBuilder, MapConfig};
use crate::pna::{full_assignment_variant, label_query, TauConfig};
use crate::query_gen::{
    build_pose_cell, generate_query, render_hint, sample_query_locations, select_hint_objects,
    Query, QueryGenConfig,
};
use crate::rng::{tag, Seed};
use crate::scene_graph::{build_scene_graph, load_scene_graph, save_scene_graph};
use crate::taxonomy::Taxonomy;
use crate::trajectory::load_trajectory;

/// How map centers are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    /// Distance-based subsampling along a trajectory.
    Trajectory,
    /// Grid sampling over the cloud bounds, keeping object-rich windows.
    Grid,
}

/// Every pipeline tunable with its default, loadable from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub cloud: PathBuf,
    pub trajectory: Option<PathBuf>,
    pub taxonomy: PathBuf,
    /// Palette JSON; the built-in seven-color palette when omitted.
    pub palette: Option<PathBuf>,
    pub output: PathBuf,
    /// Window side S in meters.
    pub side_m: f64,
    /// Raster side in pixels (H = W).
    pub raster_px: u32,
    /// Hints per query (N_t).
    pub hints_per_query: usize,
    /// On-top radius in meters.
    pub delta_m: f64,
    /// Grounding threshold for object classes, meters.
    pub tau_object_m: f64,
    /// Grounding threshold for stuff classes, meters.
    pub tau_stuff_m: f64,
    /// Minimum spacing between trajectory-sampled centers, meters.
    pub min_spacing_m: f64,
    /// Query perturbation half-width, meters.
    pub query_radius_m: f64,
    pub queries_per_center: usize,
    pub cluster: ClusterParams,
    /// Oracle candidate grid pitch, meters.
    pub oracle_grid_pitch_m: f64,
    pub sampling: SamplingMode,
    /// Center pitch for grid sampling mode, meters.
    pub grid_sample_pitch_m: f64,
    /// Grid mode keeps windows with strictly more objects than this.
    pub grid_min_objects: usize,
    pub seed: u64,
    pub recall_ks: Vec<u32>,
    pub endpoint: EndpointConfig,
    /// Optional system prompt override (path); built-in text otherwise.
    pub system_prompt: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            cloud: PathBuf::new(),
            trajectory: None,
            taxonomy: PathBuf::new(),
            palette: None,
            output: PathBuf::new(),
            side_m: 50.0,
            raster_px: 224,
            hints_per_query: 6,
            delta_m: 2.5,
            tau_object_m: 5.0,
            tau_stuff_m: 15.0,
            min_spacing_m: 10.0,
            query_radius_m: 15.0,
            queries_per_center: 4,
            cluster: ClusterParams::default(),
            oracle_grid_pitch_m: 0.5,
            sampling: SamplingMode::Trajectory,
            grid_sample_pitch_m: 50.0,
            grid_min_objects: 6,
            seed: 0,
            recall_ks: vec![5, 10, 15],
            endpoint: EndpointConfig::default(),
            system_prompt: None,
        }
    }
}

/// FNV-1a; stable fingerprint of the resolved config for the manifest.
fn fnv64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl PipelineConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", fnv64(canonical.as_bytes()))
    }

    pub fn validate_for_generation(&self) -> Result<()> {
        let missing = |field: &str| Error::Config(format!("missing required path: {field}"));
        if self.cloud.as_os_str().is_empty() {
            return Err(missing("cloud"));
        }
        if self.taxonomy.as_os_str().is_empty() {
            return Err(missing("taxonomy"));
        }
        if self.output.as_os_str().is_empty() {
            return Err(missing("output"));
        }
        if self.sampling == SamplingMode::Trajectory && self.trajectory.is_none() {
            return Err(missing("trajectory (required in trajectory sampling mode)"));
        }
        if !(self.side_m > 0.0) || self.raster_px < 2 {
            return Err(Error::Config(
                "side_m must be > 0 and raster_px >= 2".into(),
            ));
        }
        if self.hints_per_query == 0 || self.queries_per_center == 0 {
            return Err(Error::Config(
                "hints_per_query and queries_per_center must be >= 1".into(),
            ));
        }
        self.cluster.validate()
    }

    pub fn paths(&self) -> DatasetPaths {
        DatasetPaths::new(&self.output)
    }

    pub fn map_config(&self) -> MapConfig {
        MapConfig {
            side_m: self.side_m,
            cluster: self.cluster.clone(),
        }
    }

    pub fn query_config(&self) -> QueryGenConfig {
        QueryGenConfig {
            hints_per_query: self.hints_per_query,
            queries_per_center: self.queries_per_center,
            query_radius_m: self.query_radius_m,
            delta_m: self.delta_m,
            tau: TauConfig {
                object_m: self.tau_object_m,
                stuff_m: self.tau_stuff_m,
            },
        }
    }

    pub fn palette(&self) -> Result<ColorPalette> {
        match &self.palette {
            Some(path) => ColorPalette::load(path),
            None => Ok(ColorPalette::default_palette()),
        }
    }

    pub fn system_prompt_text(&self) -> Result<String> {
        match &self.system_prompt {
            Some(path) => crate::localize::load_system_prompt(path),
            None => Ok(DEFAULT_SYSTEM_PROMPT.to_owned()),
        }
    }

    fn load_cloud_and_taxonomy(&self) -> Result<(InstancePointCloud, Taxonomy)> {
        let taxonomy = Taxonomy::load(&self.taxonomy)?;
        let cloud = load_point_cloud(&self.cloud, &taxonomy)?;
        Ok((cloud, taxonomy))
    }
}

/// Counts reported by each stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StageSummary {
    pub maps: usize,
    pub queries: usize,
}

fn update_manifest(
    config: &PipelineConfig,
    paths: &DatasetPaths,
    apply: impl FnOnce(&mut Manifest),
) -> Result<Manifest> {
    let mut manifest = Manifest::load(paths).unwrap_or(Manifest {
        seed: config.seed,
        config_hash: config.config_hash(),
        raster_px: config.raster_px,
        n_maps: 0,
        n_queries: 0,
        stages: Stages::default(),
        config: None,
    });
    manifest.config = Some(serde_json::to_value(config).expect("config serializes"));
    apply(&mut manifest);
    manifest.save(paths)?;
    Ok(manifest)
}

/// Builds and persists all local maps. Centers come from the configured
/// sampling mode; empty windows are skipped and ids stay sequential in
/// center order regardless of worker count.
pub fn stage_build_maps(config: &PipelineConfig) -> Result<StageSummary> {
    config.validate_for_generation()?;
    let (cloud, taxonomy) = config.load_cloud_and_taxonomy()?;
    let builder = MapBuilder::new(&cloud, &taxonomy, config.map_config())?;

    let centers: Vec<(f64, f64)> = match config.sampling {
        SamplingMode::Trajectory => {
            let traj_path = config.trajectory.as_ref().expect("validated");
            let traj = load_trajectory(traj_path)?;
            sample_map_centers(&traj, config.min_spacing_m)?
        }
        SamplingMode::Grid => {
            builder.grid_sample_centers(config.grid_sample_pitch_m, config.grid_min_objects)?
        }
    };

    let built: Vec<Option<LocalMap>> = centers
        .par_iter()
        .map(|&center| builder.build(0, center))
        .collect::<Result<_>>()?;
    let mut maps: Vec<LocalMap> = built.into_iter().flatten().collect();
    for (i, map) in maps.iter_mut().enumerate() {
        map.id = i as u32;
    }

    let paths = config.paths();
    std::fs::create_dir_all(&paths.root).map_err(|e| Error::io(&paths.root, e))?;
    for map in &maps {
        save_map(map, config.raster_px, &paths)?;
    }
    update_manifest(config, &paths, |m| {
        m.seed = config.seed;
        m.config_hash = config.config_hash();
        m.raster_px = config.raster_px;
        m.n_maps = maps.len();
        m.stages.maps = true;
    })?;
    Ok(StageSummary {
        maps: maps.len(),
        queries: 0,
    })
}

fn load_all_maps(paths: &DatasetPaths) -> Result<Vec<LocalMap>> {
    let ids = list_map_ids(paths)?;
    if ids.is_empty() {
        return Err(Error::Integrity(
            "no maps on disk; run the map building stage first".into(),
        ));
    }
    ids.into_iter().map(|id| load_map(paths, id)).collect()
}

/// Samples query locations around each map center and generates hints
/// with ground-truth assignments. Query ids are `map_id * Q + k` for the
/// k-th location, so parallel workers cannot perturb them.
pub fn stage_gen_queries(config: &PipelineConfig) -> Result<StageSummary> {
    config.validate_for_generation()?;
    let (cloud, taxonomy) = config.load_cloud_and_taxonomy()?;
    let palette = config.palette()?;
    let builder = MapBuilder::new(&cloud, &taxonomy, config.map_config())?;
    let paths = config.paths();
    let maps = load_all_maps(&paths)?;
    let seed = Seed::new(config.seed);
    let qcfg = config.query_config();

    let per_map: Vec<Vec<Query>> = maps
        .par_iter()
        .map(|map| -> Result<Vec<Query>> {
            let mut xi_rng = seed.stream(&[tag::QUERY_XI, map.id as u64]);
            let locations = sample_query_locations(
                map.center,
                config.queries_per_center,
                config.query_radius_m,
                &mut xi_rng,
            );
            let mut queries = Vec::new();
            for (k, xi) in locations.into_iter().enumerate() {
                let query_id = map.id as u64 * config.queries_per_center as u64 + k as u64;
                let mut hint_rng = seed.stream(&[tag::HINT_SELECT, map.id as u64, k as u64]);
                if let Some(query) =
                    generate_query(&builder, map, query_id, xi, &qcfg, &palette, &mut hint_rng)?
                {
                    queries.push(query);
                }
            }
            Ok(queries)
        })
        .collect::<Result<_>>()?;
    let queries: Vec<Query> = per_map.into_iter().flatten().collect();

    save_queries(&queries, &paths)?;
    update_manifest(config, &paths, |m| {
        m.n_queries = queries.len();
        m.stages.queries = true;
    })?;
    Ok(StageSummary {
        maps: maps.len(),
        queries: queries.len(),
    })
}

/// Renders bev.png and scene_graph.json for every map.
pub fn stage_render(config: &PipelineConfig) -> Result<StageSummary> {
    let taxonomy = Taxonomy::load(&config.taxonomy)?;
    let paths = config.paths();
    let maps = load_all_maps(&paths)?;
    maps.par_iter().try_for_each(|map| -> Result<()> {
        let georef = map.georef(config.raster_px, config.raster_px)?;
        let bev = crate::bev::render_bev(map, &georef)?;
        bev.save_png(&paths.bev_png(map.id))?;
        let graph = build_scene_graph(map, &georef, &taxonomy)?;
        save_scene_graph(&graph, &paths.scene_graph_json(map.id))?;
        Ok(())
    })?;
    update_manifest(config, &paths, |m| m.stages.rendered = true)?;
    Ok(StageSummary {
        maps: maps.len(),
        queries: 0,
    })
}

/// Assignment strategy for the label stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignStrategy {
    Partial,
    Full,
}

impl AssignStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            AssignStrategy::Partial => "partial",
            AssignStrategy::Full => "full",
        }
    }
}

/// Recomputes assignments for every stored query under a strategy.
///
/// Pose cells and hint selections are reconstructed from the seed, then
/// checked against the stored hint text before labeling.
pub fn stage_label(config: &PipelineConfig, strategy: AssignStrategy) -> Result<StageSummary> {
    config.validate_for_generation()?;
    let (cloud, taxonomy) = config.load_cloud_and_taxonomy()?;
    let palette = config.palette()?;
    let builder = MapBuilder::new(&cloud, &taxonomy, config.map_config())?;
    let paths = config.paths();
    let maps = load_all_maps(&paths)?;
    let queries = load_queries(&paths)?;
    let seed = Seed::new(config.seed);
    let qcfg = config.query_config();

    let labels: Vec<LabelRecord> = queries
        .par_iter()
        .map(|query| -> Result<LabelRecord> {
            let map = maps.iter().find(|m| m.id == query.map_id).ok_or_else(|| {
                Error::Integrity(format!("query {} references missing map", query.query_id))
            })?;
            let k = query.query_id - query.map_id as u64 * config.queries_per_center as u64;
            let mut hint_rng = seed.stream(&[tag::HINT_SELECT, map.id as u64, k]);
            let cell = build_pose_cell(&builder, query.xi)?.ok_or_else(|| {
                Error::Integrity(format!("query {}: pose cell became empty", query.query_id))
            })?;
            let selected = select_hint_objects(&cell, config.hints_per_query, &mut hint_rng)
                .ok_or_else(|| {
                    Error::Integrity(format!(
                        "query {}: pose cell lost objects since generation",
                        query.query_id
                    ))
                })?;
            let mut sources = Vec::with_capacity(selected.len());
            for (i, object) in selected.iter().enumerate() {
                let name = taxonomy.display_name(object.semantic).ok_or_else(|| {
                    Error::Config(format!("semantic {} not in taxonomy", object.semantic))
                })?;
                let hint = render_hint(object, query.xi, &name, &palette, config.delta_m)?;
                if query.hints.get(i) != Some(&hint) {
                    return Err(Error::Integrity(format!(
                        "query {}: reconstructed hint {i} disagrees with stored text",
                        query.query_id
                    )));
                }
                sources.push((*object, name));
            }
            let assignments = match strategy {
                AssignStrategy::Partial => label_query(&sources, map, &qcfg.tau),
                AssignStrategy::Full => full_assignment_variant(&sources, map),
            };
            Ok(LabelRecord {
                query_id: query.query_id,
                map_id: query.map_id,
                strategy: strategy.name().to_owned(),
                assignments,
            })
        })
        .collect::<Result<_>>()?;

    save_labels(&labels, &paths)?;
    update_manifest(config, &paths, |m| m.stages.labeled = true)?;
    Ok(StageSummary {
        maps: maps.len(),
        queries: labels.len(),
    })
}

/// Runs a localizer over every stored query and writes predictions.
pub fn stage_localize(config: &PipelineConfig, method: Method) -> Result<StageSummary> {
    let taxonomy = Taxonomy::load(&config.taxonomy)?;
    let palette = config.palette()?;
    let paths = config.paths();
    let maps = load_all_maps(&paths)?;
    let queries = load_queries(&paths)?;
    let map_of = |id: u32| -> Result<&LocalMap> {
        maps.iter()
            .find(|m| m.id == id)
            .ok_or_else(|| Error::Integrity(format!("prediction references missing map {id}")))
    };

    let results: Vec<LocalizationResult> = match method {
        Method::Oracle => {
            let grid = GridConfig {
                pitch_m: config.oracle_grid_pitch_m,
            };
            queries
                .par_iter()
                .map(|q| -> Result<LocalizationResult> {
                    let map = map_of(q.map_id)?;
                    let texts: Vec<String> = q.hints.iter().map(|h| h.text.clone()).collect();
                    oracle_localize(
                        q.query_id,
                        map,
                        &texts,
                        &grid,
                        &taxonomy,
                        &palette,
                        config.delta_m,
                        config.raster_px,
                    )
                })
                .collect::<Result<_>>()?
        }
        Method::Vlm => {
            let system_text = config.system_prompt_text()?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(config.endpoint.max_in_flight.max(1))
                .build()
                .map_err(|e| Error::Config(format!("request pool: {e}")))?;
            pool.install(|| {
                queries
                    .par_iter()
                    .map(|q| -> Result<LocalizationResult> {
                        let map = map_of(q.map_id)?;
                        let georef = map.georef(config.raster_px, config.raster_px)?;
                        let bev = crate::bev::render_bev(map, &georef)?;
                        let graph = load_scene_graph(&paths.scene_graph_json(map.id))
                            .or_else(|_| build_scene_graph(map, &georef, &taxonomy))?;
                        Ok(vlm_localize(
                            &config.endpoint,
                            q.query_id,
                            &bev,
                            &graph,
                            &q.hints,
                            &system_text,
                        ))
                    })
                    .collect::<Result<_>>()
            })?
        }
    };

    save_predictions(&results, &paths)?;
    update_manifest(config, &paths, |m| m.stages.localized = true)?;
    Ok(StageSummary {
        maps: maps.len(),
        queries: results.len(),
    })
}

/// Joins stored predictions to queries and writes the report files.
pub fn stage_evaluate(config: &PipelineConfig) -> Result<EvalReport> {
    let paths = config.paths();
    let queries = load_queries(&paths)?;
    let predictions = load_predictions(&paths)?;
    let report = evaluate(&queries, &predictions, &config.recall_ks)?;
    report.save_json(&paths.report_json())?;
    report.save_csv(&paths.report_csv())?;
    report.save_buckets_csv(&paths.buckets_csv())?;
    Ok(report)
}

/// Chains every stage with the oracle localizer and partial assignments.
pub fn run_full_pipeline(config: &PipelineConfig) -> Result<EvalReport> {
    stage_build_maps(config)?;
    stage_gen_queries(config)?;
    stage_render(config)?;
    stage_label(config, AssignStrategy::Partial)?;
    stage_localize(config, Method::Oracle)?;
    stage_evaluate(config)
}
