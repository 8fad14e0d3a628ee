//! Thin CLI over the pipeline stages.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use textloc::error::Error;
use textloc::localize::Method;
use textloc::pipeline::{
    run_full_pipeline, stage_build_maps, stage_evaluate, stage_gen_queries, stage_label,
    stage_localize, AssignStrategy, PipelineConfig, SamplingMode,
};

#[derive(Parser)]
#[command(
    name = "textloc",
    about = "Text-to-point-cloud localization benchmarks: build maps, generate queries, render, label, localize, evaluate",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads; outputs are identical for any value.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Point cloud in the binary columnar format.
    #[arg(long)]
    cloud: Option<PathBuf>,
    /// Trajectory file with `x y` lines (trajectory sampling mode).
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Taxonomy JSON (label id, name, object/stuff kind).
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// Palette JSON; built-in seven-color palette when omitted.
    #[arg(long)]
    palette: Option<PathBuf>,
    /// Dataset output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Map window side S in meters [default: 50].
    #[arg(long)]
    side_m: Option<f64>,
    /// BEV raster side in pixels, H = W [default: 224].
    #[arg(long)]
    raster_px: Option<u32>,
    /// Hints per query N_t [default: 6].
    #[arg(long)]
    hints_per_query: Option<usize>,
    /// On-top radius delta in meters [default: 2.5].
    #[arg(long)]
    delta_m: Option<f64>,
    /// Grounding threshold for object classes in meters [default: 5].
    #[arg(long)]
    tau_object_m: Option<f64>,
    /// Grounding threshold for stuff classes in meters [default: 15].
    #[arg(long)]
    tau_stuff_m: Option<f64>,
    /// Minimum spacing between map centers in meters [default: 10].
    #[arg(long)]
    min_spacing_m: Option<f64>,
    /// Query perturbation half-width in meters [default: 15].
    #[arg(long)]
    query_radius_m: Option<f64>,
    /// Query locations per map center [default: 4].
    #[arg(long)]
    queries_per_center: Option<usize>,
    /// DBSCAN epsilon in meters [default: 1.5].
    #[arg(long)]
    cluster_eps: Option<f64>,
    /// DBSCAN minimum neighborhood size [default: 20].
    #[arg(long)]
    cluster_min_pts: Option<usize>,
    /// Oracle candidate grid pitch in meters [default: 0.5].
    #[arg(long)]
    oracle_grid_pitch_m: Option<f64>,
    /// Center sampling mode [default: trajectory].
    #[arg(long, value_enum)]
    sampling: Option<SamplingArg>,
    /// Center pitch for grid sampling mode in meters [default: 50].
    #[arg(long)]
    grid_sample_pitch_m: Option<f64>,
    /// Grid mode keeps windows with more objects than this [default: 6].
    #[arg(long)]
    grid_min_objects: Option<usize>,
    /// Master seed; all randomness derives from it [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Recall thresholds in meters [default: 5,10,15].
    #[arg(long, value_delimiter = ',')]
    recall_ks: Option<Vec<u32>>,
    /// Endpoint base URL for the vlm method.
    #[arg(long)]
    endpoint_url: Option<String>,
    /// Model name sent to the endpoint.
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the endpoint bearer token.
    #[arg(long)]
    token_env: Option<String>,
    /// Retries after malformed endpoint output [default: 2].
    #[arg(long)]
    max_retries: Option<u32>,
    /// Bound on concurrent endpoint requests [default: 4].
    #[arg(long)]
    max_in_flight: Option<usize>,
    /// System prompt file overriding the built-in text.
    #[arg(long)]
    system_prompt: Option<PathBuf>,
    /// Log endpoint request/response bodies (token redacted).
    #[arg(long)]
    trace: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplingArg {
    Trajectory,
    Grid,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Partial,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Oracle,
    Vlm,
}

#[derive(Subcommand)]
enum Command {
    /// Sample centers and build local maps.
    BuildMaps(ConfigArgs),
    /// Generate templated queries with ground-truth assignments.
    GenQueries(ConfigArgs),
    /// Render bev.png and scene_graph.json for every map.
    Render(ConfigArgs),
    /// Recompute assignments for stored queries.
    Label {
        #[command(flatten)]
        config: ConfigArgs,
        /// partial = threshold rule; full = forced nearest same-label.
        #[arg(long, value_enum, default_value = "partial")]
        strategy: StrategyArg,
    },
    /// Localize every stored query.
    Localize {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum, default_value = "oracle")]
        method: MethodArg,
    },
    /// Score stored predictions against ground truth.
    Evaluate(ConfigArgs),
    /// Run every stage: build-maps, gen-queries, render, label, localize
    /// (oracle), evaluate.
    Pipeline(ConfigArgs),
}

fn resolve_config(args: &ConfigArgs) -> Result<PipelineConfig, Error> {
    let mut config = match &args.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = &args.cloud {
        config.cloud = v.clone();
    }
    if let Some(v) = &args.trajectory {
        config.trajectory = Some(v.clone());
    }
    if let Some(v) = &args.taxonomy {
        config.taxonomy = v.clone();
    }
    if let Some(v) = &args.palette {
        config.palette = Some(v.clone());
    }
    if let Some(v) = &args.output {
        config.output = v.clone();
    }
    if let Some(v) = args.side_m {
        config.side_m = v;
    }
    if let Some(v) = args.raster_px {
        config.raster_px = v;
    }
    if let Some(v) = args.hints_per_query {
        config.hints_per_query = v;
    }
    if let Some(v) = args.delta_m {
        config.delta_m = v;
    }
    if let Some(v) = args.tau_object_m {
        config.tau_object_m = v;
    }
    if let Some(v) = args.tau_stuff_m {
        config.tau_stuff_m = v;
    }
    if let Some(v) = args.min_spacing_m {
        config.min_spacing_m = v;
    }
    if let Some(v) = args.query_radius_m {
        config.query_radius_m = v;
    }
    if let Some(v) = args.queries_per_center {
        config.queries_per_center = v;
    }
    if let Some(v) = args.cluster_eps {
        config.cluster.eps = v;
    }
    if let Some(v) = args.cluster_min_pts {
        config.cluster.min_pts = v;
    }
    if let Some(v) = args.oracle_grid_pitch_m {
        config.oracle_grid_pitch_m = v;
    }
    if let Some(v) = args.sampling {
        config.sampling = match v {
            SamplingArg::Trajectory => SamplingMode::Trajectory,
            SamplingArg::Grid => SamplingMode::Grid,
        };
    }
    if let Some(v) = args.grid_sample_pitch_m {
        config.grid_sample_pitch_m = v;
    }
    if let Some(v) = args.grid_min_objects {
        config.grid_min_objects = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = &args.recall_ks {
        config.recall_ks = v.clone();
    }
    if let Some(v) = &args.endpoint_url {
        config.endpoint.base_url = v.clone();
    }
    if let Some(v) = &args.model {
        config.endpoint.model = v.clone();
    }
    if let Some(v) = &args.token_env {
        config.endpoint.token_env = Some(v.clone());
    }
    if let Some(v) = args.max_retries {
        config.endpoint.max_retries = v;
    }
    if let Some(v) = args.max_in_flight {
        config.endpoint.max_in_flight = v;
    }
    if let Some(v) = &args.system_prompt {
        config.system_prompt = Some(v.clone());
    }
    if args.trace {
        config.endpoint.trace = true;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), Error> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    }
    match &cli.command {
        Command::BuildMaps(args) => {
            let summary = stage_build_maps(&resolve_config(args)?)?;
            println!("built {} maps", summary.maps);
        }
        Command::GenQueries(args) => {
            let summary = stage_gen_queries(&resolve_config(args)?)?;
            println!(
                "generated {} queries over {} maps",
                summary.queries, summary.maps
            );
        }
        Command::Render(args) => {
            let summary = stage_render_checked(args)?;
            println!("rendered {} maps", summary);
        }
        Command::Label { config, strategy } => {
            let strategy = match strategy {
                StrategyArg::Partial => AssignStrategy::Partial,
                StrategyArg::Full => AssignStrategy::Full,
            };
            let summary = stage_label(&resolve_config(config)?, strategy)?;
            println!("labeled {} queries ({})", summary.queries, strategy.name());
        }
        Command::Localize { config, method } => {
            let method = match method {
                MethodArg::Oracle => Method::Oracle,
                MethodArg::Vlm => Method::Vlm,
            };
            let summary = stage_localize(&resolve_config(config)?, method)?;
            println!("localized {} queries", summary.queries);
        }
        Command::Evaluate(args) => {
            let report = stage_evaluate(&resolve_config(args)?)?;
            for (k, r) in &report.recall {
                println!("recall@{k}m {:.4}", r);
            }
            println!("per-hint accuracy {:.4}", report.per_hint_accuracy);
        }
        Command::Pipeline(args) => {
            let config = resolve_config(args)?;
            let report = run_full_pipeline(&config)?;
            println!("pipeline complete: {} queries", report.n_queries);
            for (k, r) in &report.recall {
                println!("recall@{k}m {:.4}", r);
            }
        }
    }
    Ok(())
}

fn stage_render_checked(args: &ConfigArgs) -> Result<usize, Error> {
    let summary = textloc::pipeline::stage_render(&resolve_config(args)?)?;
    Ok(summary.maps)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = match &err {
                Error::Config(_) => "config",
                _ => "runtime",
            };
            let payload = serde_json::json!({ "error": err.to_string(), "kind": kind });
            eprintln!("{payload}");
            match kind {
                "config" => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
