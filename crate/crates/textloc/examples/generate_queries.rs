//! Generate templated text queries with ground-truth assignments.
//!
//! Each query perturbs a map center, builds the pose cell at the sampled
//! location, picks N_t objects, and renders one hint sentence per object.
//!
//! ```bash
//! cargo run --example generate_queries
//! ```

use textloc::color::ColorPalette;
use textloc::map_builder::{MapBuilder, MapConfig};
use textloc::query_gen::{generate_query, sample_query_locations, QueryGenConfig};
use textloc::rng::{tag, Seed};
use textloc::synth::{demo_town, synth_taxonomy};

fn main() -> textloc::Result<()> {
    let seed = Seed::new(11);
    let cloud = demo_town(&mut seed.stream(&[0]));
    let taxonomy = synth_taxonomy();
    let palette = ColorPalette::default_palette();

    let mut map_config = MapConfig::default();
    map_config.cluster.min_pts = 10;
    let builder = MapBuilder::new(&cloud, &taxonomy, map_config)?;
    let map = builder
        .build(0, (0.0, 0.0))?
        .expect("demo town is not empty");

    let config = QueryGenConfig {
        queries_per_center: 3,
        query_radius_m: 4.0, // keep the pose cell object-rich for the demo
        ..QueryGenConfig::default()
    };

    let mut xi_rng = seed.stream(&[tag::QUERY_XI, map.id as u64]);
    let locations = sample_query_locations(
        map.center,
        config.queries_per_center,
        config.query_radius_m,
        &mut xi_rng,
    );

    for (k, xi) in locations.into_iter().enumerate() {
        let mut hint_rng = seed.stream(&[tag::HINT_SELECT, map.id as u64, k as u64]);
        let query_id = map.id as u64 * config.queries_per_center as u64 + k as u64;
        match generate_query(
            &builder,
            &map,
            query_id,
            xi,
            &config,
            &palette,
            &mut hint_rng,
        )? {
            Some(query) => {
                println!(
                    "query {} at xi = ({:.2}, {:.2})",
                    query.query_id, xi.0, xi.1
                );
                for (hint, assignment) in query.hints.iter().zip(&query.gt_assignments) {
                    let grounding = match assignment.matched_node {
                        Some(node) => format!("grounded -> node {node}"),
                        None => "ungrounded".to_string(),
                    };
                    println!("  {:55} {grounding}", hint.text);
                }
            }
            None => println!(
                "query {k} at ({:.2}, {:.2}): too few objects, skipped",
                xi.0, xi.1
            ),
        }
    }
    Ok(())
}
