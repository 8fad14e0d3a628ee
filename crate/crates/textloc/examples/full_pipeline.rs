//! Run every pipeline stage on a synthetic town, end to end.
//!
//! Writes the canonical inputs to a temp directory, then chains
//! build-maps, gen-queries, render, label, oracle localization, and
//! evaluation over the dataset layout.
//!
//! ```bash
//! cargo run --example full_pipeline
//! ```

use textloc::cloud::save_point_cloud;
use textloc::map_builder::ClusterParams;
use textloc::pipeline::{run_full_pipeline, PipelineConfig};
use textloc::rng::Seed;
use textloc::synth::{demo_town, synth_taxonomy};
use textloc::trajectory::{save_trajectory, Trajectory};

fn main() -> textloc::Result<()> {
    let dir = std::env::temp_dir().join("textloc_full_pipeline");
    std::fs::create_dir_all(&dir).map_err(|e| textloc::Error::io(&dir, e))?;

    let cloud = demo_town(&mut Seed::new(23).stream(&[0]));
    let cloud_path = dir.join("cloud.tlpc");
    save_point_cloud(&cloud, &cloud_path)?;
    let taxonomy_path = dir.join("taxonomy.json");
    synth_taxonomy().save(&taxonomy_path)?;
    let traj_path = dir.join("trajectory.txt");
    save_trajectory(
        &Trajectory::new(vec![(0.0, 0.0), (3.0, 1.0), (25.0, 20.0)])?,
        &traj_path,
    )?;

    let config = PipelineConfig {
        cloud: cloud_path,
        trajectory: Some(traj_path),
        taxonomy: taxonomy_path,
        output: dir.join("dataset"),
        queries_per_center: 3,
        query_radius_m: 3.0,
        cluster: ClusterParams {
            eps: 1.5,
            min_pts: 10,
            overrides: Default::default(),
        },
        seed: 42,
        ..Default::default()
    };

    let report = run_full_pipeline(&config)?;
    println!("dataset written to {}", config.output.display());
    println!(
        "{} queries evaluated with the oracle localizer",
        report.n_queries
    );
    for (k, r) in &report.recall {
        println!("  recall@{k:<2}m {:.3}", r);
    }
    println!("  per-hint accuracy {:.3}", report.per_hint_accuracy);
    println!("inspect: manifest.json, maps/map_*/{{map.json,bev.png,scene_graph.json}},");
    println!("         queries.jsonl, labels.jsonl, predictions.jsonl, report.json");
    Ok(())
}
