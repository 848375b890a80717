//! One-shot contact learning and transfer for cable-suspended aerial grippers.
//!
//! A single demonstration (a payload point cloud plus the drone and link poses used to
//! grab it) is turned into kernel densities over oriented surface features. Those
//! densities are then used to place links on a new payload by maximizing a product of
//! query and formation likelihoods with simulated annealing.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the common `f64` instantiation.

pub mod cli;
pub mod cloud;
pub mod density;
pub mod error;
pub mod geom;
pub mod kdtree;
pub mod linalg;
pub mod models;
pub mod scalar;
pub mod synth;
pub mod transfer;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Vec3 = geom::Vec3<f64>;
pub type UnitQuaternion = geom::UnitQuaternion<f64>;
pub type Pose = geom::Pose<f64>;
pub type PointCloud = cloud::PointCloud<f64>;
pub type SurfaceFeature = cloud::SurfaceFeature<f64>;
pub type Curvature2 = cloud::Curvature2<f64>;
pub type Bandwidths = density::Bandwidths<f64>;
pub type MixtureDensity = density::MixtureDensity<f64>;

pub type Pose32 = geom::Pose<f32>;
pub type PointCloud32 = cloud::PointCloud<f32>;
