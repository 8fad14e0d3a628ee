//! Render a map as a BEV image and its scene graph.
//!
//! Writes bev.png (224 x 224 RGB, 50 m coverage) and scene_graph.json to
//! a temp directory, and prints the scene graph in the prompt line format.
//!
//! ```bash
//! cargo run --example render_bev
//! ```

use textloc::bev::render_bev;
use textloc::map_builder::{MapBuilder, MapConfig};
use textloc::rng::Seed;
use textloc::scene_graph::{build_scene_graph, save_scene_graph, serialize_scene_graph};
use textloc::synth::{demo_town, synth_taxonomy};

fn main() -> textloc::Result<()> {
    let cloud = demo_town(&mut Seed::new(7).stream(&[0]));
    let taxonomy = synth_taxonomy();
    let mut config = MapConfig::default();
    config.cluster.min_pts = 10;
    let builder = MapBuilder::new(&cloud, &taxonomy, config)?;
    let map = builder
        .build(0, (0.0, 0.0))?
        .expect("demo town is not empty");

    let georef = map.georef(224, 224)?;
    let bev = render_bev(&map, &georef)?;
    let graph = build_scene_graph(&map, &georef, &taxonomy)?;

    let out = std::env::temp_dir().join("textloc_render_bev");
    std::fs::create_dir_all(&out).map_err(|e| textloc::Error::io(&out, e))?;
    bev.save_png(&out.join("bev.png"))?;
    save_scene_graph(&graph, &out.join("scene_graph.json"))?;

    let occupied = bev
        .pixels()
        .iter()
        .filter(|&&c| c != bev.background)
        .count();
    println!(
        "rendered {}x{} BEV ({} of {} pixels occupied) at {:.3} m/px",
        georef.width_px,
        georef.height_px,
        occupied,
        bev.pixels().len(),
        georef.resolution()
    );
    println!("scene graph ({} nodes):", graph.nodes.len());
    print!("{}", serialize_scene_graph(&graph));
    println!("artifacts in {}", out.display());
    Ok(())
}
