//! Build local maps from a synthetic point cloud.
//!
//! Samples map centers along a trajectory, crops S x S windows, clusters
//! stuff points with DBSCAN, and applies the one-third completeness rule
//! to object instances.
//!
//! ```bash
//! cargo run --example build_maps
//! ```

use textloc::map_builder::{sample_map_centers, MapBuilder, MapConfig};
use textloc::rng::Seed;
use textloc::synth::{demo_town, synth_taxonomy};
use textloc::taxonomy::LabelKind;
use textloc::trajectory::Trajectory;

fn main() -> textloc::Result<()> {
    let cloud = demo_town(&mut Seed::new(7).stream(&[0]));
    let taxonomy = synth_taxonomy();
    println!("synthetic town: {} points", cloud.len());

    let mut config = MapConfig::default();
    config.cluster.min_pts = 10; // the demo cloud is sparser than real scans

    let builder = MapBuilder::new(&cloud, &taxonomy, config)?;
    let trajectory = Trajectory::new(vec![(0.0, 0.0), (4.0, 1.0), (14.0, 3.0)])?;
    let centers = sample_map_centers(&trajectory, 10.0)?;
    println!(
        "kept {} of {} poses as map centers (>= 10 m apart)",
        centers.len(),
        trajectory.len()
    );

    for (i, &center) in centers.iter().enumerate() {
        match builder.build(i as u32, center)? {
            Some(map) => {
                let objects = map
                    .objects
                    .iter()
                    .filter(|o| o.kind == LabelKind::Object)
                    .count();
                let stuff = map.objects.len() - objects;
                println!(
                    "map {} at ({:.1}, {:.1}): {} object instances + {} stuff clusters",
                    map.id, center.0, center.1, objects, stuff
                );
                for obj in &map.objects {
                    println!(
                        "  node {:2}  {:12}  {:6?}  {:4} pts  centroid ({:6.2}, {:6.2})",
                        obj.id,
                        taxonomy.display_name(obj.semantic).unwrap(),
                        obj.kind,
                        obj.points.len(),
                        obj.centroid_xy().0,
                        obj.centroid_xy().1,
                    );
                }
            }
            None => println!("map {i} at {center:?}: window is empty, skipped"),
        }
    }
    Ok(())
}
