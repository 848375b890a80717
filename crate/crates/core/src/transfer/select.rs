//! Feasibility flags, snapping and deduplicated ranking of candidates.

use super::CandidateGrasp;
use crate::cloud::{estimate_normal, PointCloud};
use crate::geom::{pose_distance, Pose, Vec3};
use crate::scalar::Real;

/// Surface normal at cloud point `index`, pointing out of the payload: toward the
/// viewpoint when the cloud has one, otherwise away from the cloud centroid.
pub fn outward_normal<T: Real>(cloud: &PointCloud<T>, index: usize, k: usize) -> Option<Vec3<T>> {
    let n = estimate_normal(cloud, index, k).ok()?;
    if cloud.viewpoint().is_some() {
        return Some(n);
    }
    let d = (cloud.points()[index] - cloud.centroid()).dot(n);
    if d < -T::lit(1e-9) {
        Some(-n)
    } else {
        Some(n)
    }
}

/// Flags the candidate infeasible if any link is farther than `contact_radius` from the
/// cloud, sits on a surface tilted more than `max_tilt` from world up or facing down at
/// all, or if `ln J` is `-inf`. Records each link's nearest cloud point.
pub fn feasibility_filter<T: Real>(
    mut c: CandidateGrasp<T>,
    cloud: &PointCloud<T>,
    k: usize,
    max_tilt: T,
    contact_radius: T,
) -> CandidateGrasp<T> {
    let mut ok = c.log_j.is_finite();
    c.nearest = c
        .pairs
        .iter()
        .map(|h| {
            let (i, d) = cloud.nearest(h.link.p);
            if d > contact_radius {
                ok = false;
                return None;
            }
            match outward_normal(cloud, i, k) {
                // acos rounds a wall's tiny negative z to exactly 90 degrees, so test the sign too
                Some(n) if n.z >= T::zero() && n.z.min(T::one()).acos() <= max_tilt => {}
                _ => ok = false,
            }
            Some(i)
        })
        .collect();
    c.feasible = ok;
    c
}

/// Moves every link onto its nearest cloud point, keeping orientations, and shifts its
/// drone by the same amount.
pub fn snap_to_surface<T: Real>(mut c: CandidateGrasp<T>, cloud: &PointCloud<T>) -> CandidateGrasp<T> {
    let mut moves = Vec::with_capacity(c.pairs.len());
    for (h, near) in c.pairs.iter_mut().zip(c.nearest.iter_mut()) {
        let (i, _) = cloud.nearest(h.link.p);
        let d = cloud.points()[i] - h.link.p;
        h.link = Pose::new(h.link.p + d, h.link.q);
        h.drone = Pose::new(h.drone.p + d, h.drone.q);
        *near = Some(i);
        moves.push(d);
    }
    c.snap = Some(moves);
    c
}

/// Greedy pick by descending `ln J`, dropping any candidate whose every link is within
/// `min_separation` of the matching link of one already kept.
pub fn select_top_k<T: Real>(mut cands: Vec<CandidateGrasp<T>>, k: usize, min_separation: T, rot_weight: T) -> Vec<CandidateGrasp<T>> {
    // stable, so equal scores keep chain order
    cands.sort_by(|a, b| b.log_j.total_cmp(&a.log_j));
    let mut kept: Vec<CandidateGrasp<T>> = Vec::new();
    for c in cands {
        if kept.len() >= k {
            break;
        }
        let dup = kept.iter().any(|q| {
            q.pairs.len() == c.pairs.len()
                && q.pairs.iter().zip(&c.pairs).all(|(a, b)| pose_distance(&a.link, &b.link, rot_weight) <= min_separation)
        });
        if !dup {
            kept.push(c);
        }
    }
    kept
}
