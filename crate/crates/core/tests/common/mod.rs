//! Shared synthetic scenes for the integration tests.
#![allow(dead_code)]

use aerocontact::geom::{Pose, UnitQuaternion, Vec3};
use aerocontact::models::{learn_bundle, DemonstrationRecord, LearnParams, LinkDemo, ModelBundle};
use aerocontact::synth;
use aerocontact::transfer::{QueryScene, TransferParams};
use aerocontact::PointCloud;

pub const HANG: f64 = 1.0;

pub fn level_link(x: f64, y: f64, z: f64) -> LinkDemo<f64> {
    let q = UnitQuaternion::identity();
    LinkDemo { drone: Pose::new(Vec3::new(x, y, z + HANG), q), link: Pose::new(Vec3::new(x, y, z), q) }
}

pub fn cloud(points: Vec<Vec3<f64>>) -> PointCloud {
    PointCloud::new(points, None).unwrap()
}

/// What a downward-looking sensor sees: everything but the bottom face, with the
/// viewpoint overhead.
pub fn visible(points: Vec<Vec3<f64>>, depth: f64) -> PointCloud {
    let pts = points.into_iter().filter(|p| p.z > -depth + 1e-9).collect();
    PointCloud::new(pts, Some(Vec3::new(0.0, 0.0, 2.0))).unwrap()
}

/// 0.3 x 0.3 x 0.1 box, one link at the center of the top face.
pub fn box_demo() -> DemonstrationRecord<f64> {
    let c = visible(synth::box_surface(0.3, 0.3, 0.1, 0.01), 0.1);
    DemonstrationRecord::new(c, vec![level_link(0.0, 0.0, 0.0)], "box", 0.05).unwrap()
}

/// Square plate with a center link.
pub fn plate_demo(size: f64) -> DemonstrationRecord<f64> {
    let c = visible(synth::plate(size, 0.05, 0.01), 0.05);
    DemonstrationRecord::new(c, vec![level_link(0.0, 0.0, 0.0)], "plate", 0.05).unwrap()
}

pub fn plate_scene(size: f64) -> QueryScene<f64> {
    QueryScene::new(visible(synth::plate(size, 0.05, 0.01), 0.05), 30).unwrap()
}

/// Link positions of the triangle demo: each corner pulled 0.15 m toward the centroid.
pub fn triangle_links(side: f64) -> Vec<[f64; 2]> {
    synth::triangle_corners(side)
        .iter()
        .map(|c| {
            let n = (c[0] * c[0] + c[1] * c[1]).sqrt();
            let s = (n - 0.15) / n;
            [c[0] * s, c[1] * s]
        })
        .collect()
}

pub fn triangle_demo(side: f64) -> DemonstrationRecord<f64> {
    let c = visible(synth::triangle_slab(side, 0.05, 0.01), 0.05);
    let links = triangle_links(side).iter().map(|p| level_link(p[0], p[1], 0.0)).collect();
    DemonstrationRecord::new(c, links, "triangle", 0.05).unwrap()
}

pub fn learn(record: &DemonstrationRecord<f64>, seed: u64) -> ModelBundle<f64> {
    learn_bundle(record, &LearnParams { seed, ..LearnParams::default() }).unwrap()
}

pub fn params(seed: u64) -> TransferParams<f64> {
    TransferParams { seed, ..TransferParams::default() }
}
