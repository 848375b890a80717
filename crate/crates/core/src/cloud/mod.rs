//! Point clouds and the surface features extracted from them.

mod features;
mod io;

pub use features::{
    estimate_normal, extract_all, principal_curvatures, sample_contact_region, sample_task_features,
    surface_feature, UMBILIC_ABS_TOL, UMBILIC_REL_TOL,
};
pub use io::{load_cloud, save_cloud, CloudFormat};

use crate::error::{Error, Result};
use crate::geom::{Pose, Vec3};
use crate::kdtree::KdTree;
use crate::scalar::Real;

/// Points closer than this are treated as duplicates on ingestion.
pub const DEDUP_EPS: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct PointCloud<T: Real> {
    tree: KdTree<T>,
    viewpoint: Option<Vec3<T>>,
}

impl<T: Real> PointCloud<T> {
    /// Near-duplicates (within [`DEDUP_EPS`]) are removed, keeping the first occurrence.
    /// Non-finite points are rejected.
    pub fn new(points: Vec<Vec3<T>>, viewpoint: Option<Vec3<T>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(format!("point {i} is not finite")));
        }
        let all = KdTree::new(points);
        let eps = T::lit(DEDUP_EPS);
        let mut keep = vec![true; all.len()];
        for i in 0..all.len() {
            let p = all.points()[i];
            if all.within_radius(p, eps).into_iter().any(|j| j < i && keep[j]) {
                keep[i] = false;
            }
        }
        let tree = if keep.iter().all(|&k| k) {
            all
        } else {
            let kept: Vec<_> =
                all.points().iter().zip(&keep).filter(|(_, &k)| k).map(|(p, _)| *p).collect();
            KdTree::new(kept)
        };
        Ok(Self { tree, viewpoint })
    }

    pub fn points(&self) -> &[Vec3<T>] {
        self.tree.points()
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn viewpoint(&self) -> Option<Vec3<T>> {
        self.viewpoint
    }

    pub fn set_viewpoint(&mut self, vp: Option<Vec3<T>>) {
        self.viewpoint = vp;
    }

    pub fn tree(&self) -> &KdTree<T> {
        &self.tree
    }

    pub fn nearest(&self, q: Vec3<T>) -> (usize, T) {
        self.tree.nearest(q).expect("cloud is never empty")
    }

    pub fn centroid(&self) -> Vec3<T> {
        let n = T::from_usize(self.len()).unwrap_or_else(T::one);
        self.points().iter().fold(Vec3::zero(), |a, p| a + *p) * (T::one() / n)
    }
}

/// Principal curvature magnitudes, `r1 >= r2 >= 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Curvature2<T> {
    pub r1: T,
    pub r2: T,
}

impl<T: Real> Curvature2<T> {
    pub fn new(r1: T, r2: T) -> Self {
        Self { r1, r2 }
    }

    pub fn to_array(self) -> [T; 2] {
        [self.r1, self.r2]
    }
}

/// Oriented surface point: frame columns are (k1, n x k1, n).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SurfaceFeature<T: Real> {
    pub pose: Pose<T>,
    pub r: Curvature2<T>,
}

impl<T: Real> SurfaceFeature<T> {
    pub fn new(pose: Pose<T>, r: Curvature2<T>) -> Self {
        Self { pose, r }
    }

    pub fn normal(&self) -> Vec3<T> {
        self.pose.q.axis(2)
    }
}
