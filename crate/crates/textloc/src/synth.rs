//! Synthetic scene construction for examples, fixtures, and tests.

use rand_core::RngCore;

use crate::cloud::{InstancePoint, InstancePointCloud};
use crate::color::ColorRgb;
use crate::geom::WorldPoint;
use crate::rng;
use crate::taxonomy::{LabelDef, LabelKind, Taxonomy};

/// Label ids used by the synthetic taxonomy.
pub mod labels {
    pub const BUILDING: u16 = 1;
    pub const CAR: u16 = 2;
    pub const POLE: u16 = 3;
    pub const TRAFFIC_SIGN: u16 = 4;
    pub const VEGETATION: u16 = 10;
    pub const ROAD: u16 = 11;
    pub const TERRAIN: u16 = 12;
}

/// A small urban taxonomy: four object labels, three stuff labels.
pub fn synth_taxonomy() -> Taxonomy {
    Taxonomy::new(vec![
        LabelDef {
            id: labels::BUILDING,
            name: "building".into(),
            kind: LabelKind::Object,
        },
        LabelDef {
            id: labels::CAR,
            name: "car".into(),
            kind: LabelKind::Object,
        },
        LabelDef {
            id: labels::POLE,
            name: "pole".into(),
            kind: LabelKind::Object,
        },
        LabelDef {
            id: labels::TRAFFIC_SIGN,
            name: "traffic sign".into(),
            kind: LabelKind::Object,
        },
        LabelDef {
            id: labels::VEGETATION,
            name: "vegetation".into(),
            kind: LabelKind::Stuff,
        },
        LabelDef {
            id: labels::ROAD,
            name: "road".into(),
            kind: LabelKind::Stuff,
        },
        LabelDef {
            id: labels::TERRAIN,
            name: "terrain".into(),
            kind: LabelKind::Stuff,
        },
    ])
    .unwrap()
}

/// Accumulates labeled point blobs into a cloud.
#[derive(Debug, Default)]
pub struct SceneBuilder {
    points: Vec<InstancePoint>,
    next_instance: u32,
}

impl SceneBuilder {
    pub fn new() -> Self {
        Self {
            points: Vec::new(),
            next_instance: 1,
        }
    }

    /// Adds a disc-shaped object instance and returns its instance id.
    /// The first point sits exactly at `center`.
    pub fn add_object(
        &mut self,
        rng: &mut impl RngCore,
        semantic: u16,
        center: (f64, f64),
        radius: f64,
        n_points: usize,
        color: ColorRgb,
    ) -> u32 {
        let instance = self.next_instance;
        self.next_instance += 1;
        self.push_disc(
            rng, semantic, instance, center, radius, n_points, color, 0.5, 6.0,
        );
        instance
    }

    /// Adds a disc-shaped stuff patch (instance id 0, re-clustered later).
    pub fn add_stuff(
        &mut self,
        rng: &mut impl RngCore,
        semantic: u16,
        center: (f64, f64),
        radius: f64,
        n_points: usize,
        color: ColorRgb,
    ) {
        self.push_disc(rng, semantic, 0, center, radius, n_points, color, 0.0, 0.3);
    }

    #[allow(clippy::too_many_arguments)]
    fn push_disc(
        &mut self,
        rng: &mut impl RngCore,
        semantic: u16,
        instance: u32,
        center: (f64, f64),
        radius: f64,
        n_points: usize,
        color: ColorRgb,
        z_lo: f64,
        z_hi: f64,
    ) {
        for i in 0..n_points {
            let (x, y) = if i == 0 {
                center
            } else {
                let r = radius * rng::uniform_f64(rng).sqrt();
                let a = rng::range_f64(rng, 0.0, std::f64::consts::TAU);
                (center.0 + r * a.cos(), center.1 + r * a.sin())
            };
            let z = rng::range_f64(rng, z_lo, z_hi);
            self.points.push(InstancePoint {
                p: WorldPoint::new(x, y, z),
                c: color,
                semantic,
                instance,
            });
        }
    }

    pub fn finish(self) -> InstancePointCloud {
        InstancePointCloud::new(self.points)
    }
}

/// A compact demo town around the origin: six distinct objects (palette
/// colors, so hint colors are exact) plus road and vegetation stuff.
/// Deterministic for a fixed rng stream.
pub fn demo_town(rng: &mut impl RngCore) -> InstancePointCloud {
    let mut scene = SceneBuilder::new();
    let gray = ColorRgb::new(128, 128, 128);
    let beige = ColorRgb::new(245, 245, 220);
    let black = ColorRgb::new(0, 0, 0);
    let bright = ColorRgb::new(200, 200, 200);
    let dark_green = ColorRgb::new(0, 100, 0);
    let green = ColorRgb::new(0, 200, 0);

    scene.add_object(rng, labels::BUILDING, (-12.0, 8.0), 3.0, 60, gray);
    scene.add_object(rng, labels::BUILDING, (14.0, -6.0), 3.5, 60, beige);
    scene.add_object(rng, labels::CAR, (3.0, 10.0), 1.2, 30, black);
    scene.add_object(rng, labels::CAR, (-6.0, -11.0), 1.2, 30, bright);
    scene.add_object(rng, labels::POLE, (8.0, 3.0), 0.4, 20, gray);
    scene.add_object(rng, labels::TRAFFIC_SIGN, (-2.0, 15.0), 0.5, 20, beige);
    scene.add_stuff(rng, labels::ROAD, (0.0, 0.0), 6.0, 400, black);
    scene.add_stuff(rng, labels::VEGETATION, (15.0, 12.0), 4.0, 250, dark_green);
    scene.add_stuff(rng, labels::TERRAIN, (-15.0, -8.0), 4.0, 250, green);
    scene.finish()
}
