//! Regenerate the committed toy fixtures under `fixtures/`.
//!
//! The toy cloud is a small scripted town (about 550 points) that runs
//! through the whole pipeline in under a second. Everything here is
//! seeded, so reruns reproduce the committed files byte for byte.
//!
//! ```bash
//! cargo run --example generate_fixtures
//! ```

use std::path::PathBuf;

use textloc::cloud::save_point_cloud;
use textloc::color::ColorRgb;
use textloc::map_builder::ClusterParams;
use textloc::pipeline::PipelineConfig;
use textloc::rng::Seed;
use textloc::synth::{labels, SceneBuilder};
use textloc::trajectory::{save_trajectory, Trajectory};

fn main() -> textloc::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&fixtures).map_err(|e| textloc::Error::io(&fixtures, e))?;

    let mut rng = Seed::new(4242).stream(&[0]);
    let mut scene = SceneBuilder::new();
    let gray = ColorRgb::new(128, 128, 128);
    let beige = ColorRgb::new(245, 245, 220);
    let black = ColorRgb::new(0, 0, 0);
    let bright = ColorRgb::new(200, 200, 200);
    let dark_green = ColorRgb::new(0, 100, 0);

    scene.add_object(&mut rng, labels::BUILDING, (-10.0, 7.0), 2.5, 15, gray);
    scene.add_object(&mut rng, labels::BUILDING, (12.0, -5.0), 3.0, 15, beige);
    scene.add_object(&mut rng, labels::CAR, (4.0, 9.0), 1.2, 10, black);
    scene.add_object(&mut rng, labels::CAR, (-5.0, -10.0), 1.2, 10, bright);
    scene.add_object(&mut rng, labels::POLE, (7.0, 2.0), 0.4, 8, gray);
    scene.add_object(&mut rng, labels::TRAFFIC_SIGN, (-2.0, 13.0), 0.5, 8, beige);
    scene.add_stuff(&mut rng, labels::ROAD, (0.0, 0.0), 3.5, 75, black);
    scene.add_stuff(
        &mut rng,
        labels::VEGETATION,
        (13.0, 10.0),
        3.0,
        60,
        dark_green,
    );
    let cloud = scene.finish();

    save_point_cloud(&cloud, &fixtures.join("toy_cloud.tlpc"))?;
    textloc::synth::synth_taxonomy().save(&fixtures.join("toy_taxonomy.json"))?;
    save_trajectory(
        &Trajectory::new(vec![(0.0, 0.0), (2.0, 1.0), (4.0, 2.0)])?,
        &fixtures.join("toy_trajectory.txt"),
    )?;

    // config with paths relative to the repository root
    let config = PipelineConfig {
        cloud: "crates/textloc/fixtures/toy_cloud.tlpc".into(),
        trajectory: Some("crates/textloc/fixtures/toy_trajectory.txt".into()),
        taxonomy: "crates/textloc/fixtures/toy_taxonomy.json".into(),
        output: "target/toy_dataset".into(),
        queries_per_center: 2,
        query_radius_m: 2.0,
        cluster: ClusterParams {
            eps: 1.5,
            min_pts: 10,
            overrides: Default::default(),
        },
        seed: 42,
        ..Default::default()
    };
    config.save(&fixtures.join("toy_config.json"))?;

    println!(
        "wrote fixtures to {} ({} cloud points)",
        fixtures.display(),
        cloud.len()
    );
    Ok(())
}
