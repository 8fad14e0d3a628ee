//! Localize a generated query with the constraint-grid oracle.
//!
//! The oracle scores every 0.5 m grid candidate by how many hints some
//! map object can satisfy (semantic + color + direction) and predicts
//! the centroid of the max-score region.
//!
//! ```bash
//! cargo run --example oracle_localization
//! ```

use textloc::color::ColorPalette;
use textloc::localize::{oracle_localize, oracle_score, GridConfig};
use textloc::map_builder::{MapBuilder, MapConfig};
use textloc::query_gen::{generate_query, QueryGenConfig};
use textloc::rng::{tag, Seed};
use textloc::synth::{demo_town, synth_taxonomy};

fn main() -> textloc::Result<()> {
    let seed = Seed::new(13);
    let cloud = demo_town(&mut seed.stream(&[0]));
    let taxonomy = synth_taxonomy();
    let palette = ColorPalette::default_palette();
    let mut map_config = MapConfig::default();
    map_config.cluster.min_pts = 10;
    let builder = MapBuilder::new(&cloud, &taxonomy, map_config)?;
    let map = builder
        .build(0, (0.0, 0.0))?
        .expect("demo town is not empty");

    let config = QueryGenConfig::default();
    let xi = (2.0, -1.5);
    let mut hint_rng = seed.stream(&[tag::HINT_SELECT, 0, 0]);
    let query = generate_query(&builder, &map, 0, xi, &config, &palette, &mut hint_rng)?
        .expect("pose cell holds enough objects");

    println!("ground truth xi = ({:.2}, {:.2})", xi.0, xi.1);
    for hint in &query.hints {
        println!("  {}", hint.text);
    }

    let texts: Vec<String> = query.hints.iter().map(|h| h.text.clone()).collect();
    let at_truth = oracle_score(xi, &texts, &map, &taxonomy, &palette, config.delta_m)?;
    println!(
        "oracle score at ground truth: {at_truth} of {}",
        texts.len()
    );

    let result = oracle_localize(
        0,
        &map,
        &texts,
        &GridConfig::default(),
        &taxonomy,
        &palette,
        config.delta_m,
        224,
    )?;
    let (px, py) = result.predicted_world.unwrap();
    let error = ((px - xi.0).powi(2) + (py - xi.1).powi(2)).sqrt();
    println!("prediction ({px:.2}, {py:.2}), error {error:.2} m");
    let pixel = result.predicted_pixel.unwrap();
    println!(
        "predicted pixel [{}, {}] on the 224x224 BEV raster",
        pixel.u, pixel.v
    );
    for a in result.assignments.unwrap() {
        let node = a
            .matched_node
            .map(|n| n.to_string())
            .unwrap_or_else(|| "None".into());
        println!(
            "  {:12} grounded={} matched_node={}",
            a.object_label, a.grounded, node
        );
    }
    Ok(())
}
