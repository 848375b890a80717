use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Curvature2, PointCloud, SurfaceFeature};
use crate::error::{Error, Result};
use crate::geom::{canonical_tangent, Pose, UnitQuaternion, Vec3};
use crate::linalg::{solve, symmetric_eigen3};
use crate::scalar::Real;

/// Below `UMBILIC_ABS_TOL + UMBILIC_REL_TOL * r1` the two principal curvatures are
/// considered equal and k1 falls back to the canonical tangent (+x projected).
pub const UMBILIC_ABS_TOL: f64 = 0.05;
pub const UMBILIC_REL_TOL: f64 = 0.05;

const TASK_RETRIES: usize = 10;
// |n.z| below this counts as horizontal for the +z orientation rule
const HEMISPHERE_TIE: f64 = 1e-6;

fn neighbors<T: Real>(cloud: &PointCloud<T>, index: usize, k: usize) -> Result<Vec<Vec3<T>>> {
    let p = *cloud
        .points()
        .get(index)
        .ok_or_else(|| Error::InvalidParameter(format!("point index {index} out of range")))?;
    if cloud.len() < k + 1 {
        return Err(Error::InvalidParameter(format!(
            "feature extraction needs at least {} points, cloud has {}",
            k + 1,
            cloud.len()
        )));
    }
    Ok(cloud.tree().knn(p, k).into_iter().map(|(i, _)| cloud.points()[i]).collect())
}

fn orient<T: Real>(n: Vec3<T>, at: Vec3<T>, viewpoint: Option<Vec3<T>>) -> Vec3<T> {
    let flip = match viewpoint {
        Some(vp) => n.dot(vp - at) < T::zero(),
        None => {
            let tie = T::lit(HEMISPHERE_TIE);
            if n.z.abs() > tie {
                n.z < T::zero()
            } else if n.x.abs() > tie {
                n.x < T::zero()
            } else {
                n.y < T::zero()
            }
        }
    };
    if flip {
        -n
    } else {
        n
    }
}

/// Unit normal from the k-NN covariance (smallest-eigenvalue eigenvector).
pub fn estimate_normal<T: Real>(cloud: &PointCloud<T>, index: usize, k: usize) -> Result<Vec3<T>> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!("normal estimation needs k >= 3, got {k}")));
    }
    let nb = neighbors(cloud, index, k)?;
    let inv = T::one() / T::from_usize(nb.len()).unwrap_or_else(T::one);
    let c = nb.iter().fold(Vec3::zero(), |a, p| a + *p) * inv;
    let mut cov = [[T::zero(); 3]; 3];
    for p in &nb {
        let d = *p - c;
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += d[i] * d[j] * inv;
            }
        }
    }
    let (vals, vecs) = symmetric_eigen3(&cov);
    // rank < 2: the neighborhood is a line or a point
    if !(vals[1] > vals[2] * T::epsilon() * T::lit(1e3)) {
        return Err(Error::DegenerateNeighborhood(index));
    }
    let n = vecs[0].normalized().ok_or(Error::DegenerateNeighborhood(index))?;
    Ok(orient(n, cloud.points()[index], cloud.viewpoint()))
}

/// Principal directions and curvature magnitudes from a least-squares quadric height field.
///
/// Returns `(k1, k2, r)` with `k1, k2` tangent to the estimated normal and `r.r1 >= r.r2 >= 0`.
pub fn principal_curvatures<T: Real>(
    cloud: &PointCloud<T>,
    index: usize,
    k: usize,
) -> Result<(Vec3<T>, Vec3<T>, Curvature2<T>)> {
    if k < 6 {
        return Err(Error::InvalidParameter(format!("curvature estimation needs k >= 6, got {k}")));
    }
    let n = estimate_normal(cloud, index, k)?;
    let nb = neighbors(cloud, index, k)?;
    let origin = cloud.points()[index];
    let e1 = canonical_tangent(n);
    let e2 = n.cross(e1);

    let local: Vec<(T, T, T)> = nb
        .iter()
        .map(|p| {
            let d = *p - origin;
            (d.dot(e1), d.dot(e2), d.dot(n))
        })
        .collect();
    let h = local.iter().fold(T::zero(), |m, &(x, y, _)| m.max((x * x + y * y).sqrt()));
    if !(h > T::zero()) {
        return Err(Error::DegenerateNeighborhood(index));
    }

    // z = a u^2 + b uv + c v^2 + d u + e v + f with u = x/h, v = y/h
    let mut ata = [T::zero(); 36];
    let mut atb = [T::zero(); 6];
    for &(x, y, z) in &local {
        let (u, v) = (x / h, y / h);
        let row = [u * u, u * v, v * v, u, v, T::one()];
        for i in 0..6 {
            for j in 0..6 {
                ata[i * 6 + j] += row[i] * row[j];
            }
            atb[i] += row[i] * z;
        }
    }
    let coef = solve(&mut ata, &mut atb, 6, T::epsilon() * T::lit(1e4)).ok_or(Error::FitFailure(index))?;
    let h2 = h * h;
    let (fxx, fxy, fyy) = (T::lit(2.0) * coef[0] / h2, coef[1] / h2, T::lit(2.0) * coef[2] / h2);
    let (fx, fy) = (coef[3] / h, coef[4] / h);

    // shape operator S = I^-1 II in parameter coordinates
    let g = (T::one() + fx * fx + fy * fy).sqrt();
    let (e, f, gg) = (T::one() + fx * fx, fx * fy, T::one() + fy * fy);
    let (l, m, nn) = (fxx / g, fxy / g, fyy / g);
    let det_i = e * gg - f * f;
    let s11 = (gg * l - f * m) / det_i;
    let s12 = (gg * m - f * nn) / det_i;
    let s21 = (e * m - f * l) / det_i;
    let s22 = (e * nn - f * m) / det_i;
    let half_tr = (s11 + s22) * T::lit(0.5);
    let det_s = s11 * s22 - s12 * s21;
    let disc = (half_tr * half_tr - det_s).max(T::zero()).sqrt();
    let (ka, kb) = (half_tr + disc, half_tr - disc);
    let (k_major, r1, r2) = if ka.abs() >= kb.abs() {
        (ka, ka.abs(), kb.abs())
    } else {
        (kb, kb.abs(), ka.abs())
    };
    if !(r1.is_finite() && r2.is_finite()) {
        return Err(Error::FitFailure(index));
    }

    let project = |v: Vec3<T>| (v - n * n.dot(v)).normalized();
    let umbilic = r1 - r2 <= T::lit(UMBILIC_ABS_TOL) + T::lit(UMBILIC_REL_TOL) * r1;
    let mut k1 = None;
    if !umbilic {
        // eigenvector of S for k_major, mapped through the surface tangents (1,0,fx), (0,1,fy)
        let c1 = (s12, k_major - s11);
        let c2 = (k_major - s22, s21);
        let (a, b) = if c1.0 * c1.0 + c1.1 * c1.1 >= c2.0 * c2.0 + c2.1 * c2.1 { c1 } else { c2 };
        let xu = e1 + n * fx;
        let xv = e2 + n * fy;
        k1 = project(xu * a + xv * b);
    }
    let mut k1 = k1.unwrap_or_else(|| canonical_tangent(n));
    let tie = T::lit(1e-6);
    let flip = if k1.x.abs() > tie {
        k1.x < T::zero()
    } else if k1.y.abs() > tie {
        k1.y < T::zero()
    } else {
        k1.z < T::zero()
    };
    if flip {
        k1 = -k1;
    }
    let k2 = n.cross(k1);
    Ok((k1, k2, Curvature2::new(r1, r2)))
}

pub fn surface_feature<T: Real>(cloud: &PointCloud<T>, index: usize, k: usize) -> Result<SurfaceFeature<T>> {
    let (k1, k2, r) = principal_curvatures(cloud, index, k)?;
    let n = k1.cross(k2);
    let q = UnitQuaternion::from_columns(k1, k2, n);
    Ok(SurfaceFeature::new(Pose::new(cloud.points()[index], q), r))
}

/// Features for every point, computed in parallel. Failed points are `None`.
pub fn extract_all<T: Real>(cloud: &PointCloud<T>, k: usize) -> Vec<Option<SurfaceFeature<T>>> {
    (0..cloud.len()).into_par_iter().map(|i| surface_feature(cloud, i, k).ok()).collect()
}

/// Surface features around a link: uniform draws from the points within `radius` of the
/// link origin, without replacement when enough points are available.
pub fn sample_contact_region<T: Real>(
    cloud: &PointCloud<T>,
    link_pose: &Pose<T>,
    radius: T,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<SurfaceFeature<T>>> {
    let candidates = cloud.tree().within_radius(link_pose.p, radius);
    if candidates.is_empty() {
        return Err(Error::NoContact { radius: radius.to_f64_lossy() });
    }
    let computed: Vec<Result<SurfaceFeature<T>>> =
        candidates.par_iter().map(|&i| surface_feature(cloud, i, k)).collect();
    let mut first_err = None;
    let mut valid = Vec::with_capacity(computed.len());
    for r in computed {
        match r {
            Ok(f) => valid.push(f),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if valid.is_empty() {
        return Err(first_err.unwrap_or(Error::NoContact { radius: radius.to_f64_lossy() }));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if valid.len() >= n {
        Ok(index::sample(&mut rng, valid.len(), n).into_iter().map(|i| valid[i]).collect())
    } else {
        Ok((0..n).map(|_| valid[rng.random_range(0..valid.len())]).collect())
    }
}

/// Features at uniformly drawn point indices. A degenerate draw is retried a few times
/// and then dropped with a warning, so the result may hold fewer than `n` features.
pub fn sample_task_features<T: Real>(
    cloud: &PointCloud<T>,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<SurfaceFeature<T>>> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut got = None;
        for _ in 0..=TASK_RETRIES {
            let i = rng.random_range(0..cloud.len());
            match surface_feature(cloud, i, k) {
                Ok(f) => {
                    got = Some(f);
                    break;
                }
                Err(Error::InvalidParameter(msg)) => return Err(Error::InvalidParameter(msg)),
                Err(_) => {}
            }
        }
        match got {
            Some(f) => out.push(f),
            None => log::warn!("skipping a task feature after {TASK_RETRIES} degenerate retries"),
        }
    }
    Ok(out)
}
