//! Compare partial and full node assignment on a shifted pose cell.
//!
//! The pose cell sits 18 m east of the map center, so some of its
//! objects drift away from (or out of) the map. Partial assignment
//! grounds only hints whose map/cell centroids agree within tau; the
//! full variant forces every hint onto the nearest same-label node.
//!
//! ```bash
//! cargo run --example label_assignments
//! ```

use textloc::cloud::InstancePoint;
use textloc::color::ColorRgb;
use textloc::geom::WorldPoint;
use textloc::map_builder::{MapBuilder, MapConfig};
use textloc::pna::{full_assignment_variant, label_query, TauConfig};
use textloc::query_gen::build_pose_cell;
use textloc::rng::Seed;
use textloc::synth::{demo_town, labels, synth_taxonomy};

fn main() -> textloc::Result<()> {
    let mut cloud = demo_town(&mut Seed::new(7).stream(&[0]));
    // one extra building far east: visible from the pose cell below but
    // outside the map window, so only the full variant can assign it
    for k in 0..12 {
        let a = k as f64 * 0.6;
        cloud.points.push(InstancePoint {
            p: WorldPoint::new(40.0 + 1.5 * a.cos(), 5.0 + 1.5 * a.sin(), 3.0),
            c: ColorRgb::new(128, 128, 128),
            semantic: labels::BUILDING,
            instance: 99,
        });
    }
    let taxonomy = synth_taxonomy();
    let mut config = MapConfig::default();
    config.cluster.min_pts = 10;
    let builder = MapBuilder::new(&cloud, &taxonomy, config)?;

    let map = builder
        .build(0, (0.0, 0.0))?
        .expect("demo town is not empty");
    let xi = (18.0, 0.0);
    let cell = build_pose_cell(&builder, xi)?.expect("pose cell is not empty");
    println!(
        "map holds {} instances; pose cell at ({}, {}) holds {}",
        map.objects.len(),
        xi.0,
        xi.1,
        cell.objects.len()
    );

    let sources: Vec<(&textloc::map_builder::ObjectInstance, String)> = cell
        .objects
        .iter()
        .map(|o| (o, taxonomy.display_name(o.semantic).unwrap()))
        .collect();

    let tau = TauConfig::default();
    let partial = label_query(&sources, &map, &tau);
    let full = full_assignment_variant(&sources, &map);

    println!(
        "(tau: {} m for objects, {} m for stuff)",
        tau.object_m, tau.stuff_m
    );
    println!("{:<14} {:>18} {:>18}", "hint object", "partial", "full");
    for ((_, name), (p, f)) in sources.iter().zip(partial.iter().zip(&full)) {
        let show = |a: &textloc::pna::Assignment| match a.matched_node {
            Some(node) => format!("node {node}"),
            None => "ungrounded".to_string(),
        };
        println!("{:<14} {:>18} {:>18}", name, show(p), show(f));
    }

    let partial_grounded = partial.iter().filter(|a| a.grounded).count();
    let full_grounded = full.iter().filter(|a| a.grounded).count();
    println!(
        "grounded: {partial_grounded} partial vs {full_grounded} full (of {})",
        partial.len()
    );
    Ok(())
}
