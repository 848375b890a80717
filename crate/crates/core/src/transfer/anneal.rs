//! Simulated annealing over link formations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::select::{feasibility_filter, select_top_k};
use super::{QueryDensity, QueryScene, TransferParams};
use crate::error::{Error, Result};
use crate::geom::{Pose, UnitQuaternion, Vec3};
use crate::models::{ConfigurationModel, LinkDemo};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateGrasp<T: Real> {
    /// One (drone, link) pair per contact-model link.
    pub pairs: Vec<LinkDemo<T>>,
    /// `ln J`; `-inf` when any factor vanishes.
    pub log_j: f64,
    pub feasible: bool,
    /// Nearest cloud point to each link, when one was within the contact radius.
    pub nearest: Vec<Option<usize>>,
    /// Displacement applied to each link by [`super::snap_to_surface`].
    pub snap: Option<Vec<Vec3<T>>>,
}

impl<T: Real> CandidateGrasp<T> {
    pub fn new(pairs: Vec<LinkDemo<T>>, log_j: f64) -> Self {
        let n = pairs.len();
        Self { pairs, log_j, feasible: true, nearest: vec![None; n], snap: None }
    }

    pub fn links(&self) -> Vec<Pose<T>> {
        self.pairs.iter().map(|p| p.link).collect()
    }
}

#[derive(Clone, Debug)]
pub struct ChainReport<T: Real> {
    pub best: Vec<Pose<T>>,
    pub best_log_j: f64,
    /// Best-so-far `ln J` after initialization and after every step.
    pub trace: Vec<f64>,
}

/// `ln J = Σ_n ln Q_n(L_n) + ln H(pairs)`.
pub fn likelihood<T: Real>(pairs: &[LinkDemo<T>], query: &QueryDensity<T>, config: &ConfigurationModel<T>) -> Result<f64> {
    if pairs.len() != query.links.len() {
        return Err(Error::DimensionMismatch { expected: query.links.len(), got: pairs.len() });
    }
    Ok(log_j_unchecked(pairs, query, config))
}

fn log_j_unchecked<T: Real>(pairs: &[LinkDemo<T>], query: &QueryDensity<T>, config: &ConfigurationModel<T>) -> f64 {
    let mut total = 0.0;
    for (n, h) in pairs.iter().enumerate() {
        total += query.log_eval(n, &h.link);
        if total == f64::NEG_INFINITY {
            return total;
        }
    }
    total + config.log_eval(pairs)
}

fn formation<T: Real>(links: &[Pose<T>], config: &ConfigurationModel<T>) -> Vec<LinkDemo<T>> {
    links.iter().enumerate().map(|(n, l)| LinkDemo { drone: config.drone_for_link(n, l), link: *l }).collect()
}

fn gauss3<T: Real>(rng: &mut ChaCha8Rng, s: f64) -> Vec3<T> {
    let mut g = || T::lit(s * rng.sample::<f64, _>(StandardNormal));
    Vec3::new(g(), g(), g())
}

fn accept(cur: f64, new: f64, temp: f64, rng: &mut ChaCha8Rng) -> bool {
    if cur == f64::NEG_INFINITY {
        return true;
    }
    if new == f64::NEG_INFINITY || new.is_nan() {
        return false;
    }
    new >= cur || rng.random::<f64>() < ((new - cur) / temp).exp()
}

fn propose<T: Real>(cur: &[Pose<T>], query: &QueryDensity<T>, params: &TransferParams<T>, scale: f64, rng: &mut ChaCha8Rng) -> Vec<Pose<T>> {
    let s = &params.schedule;
    let sp = s.position_scale.to_f64_lossy() * scale;
    let sr = s.rotation_scale.to_f64_lossy() * scale;
    let mut next = cur.to_vec();
    if rng.random::<f64>() < s.reanchor_prob {
        let n = rng.random_range(0..cur.len());
        next[n] = query.sample(n, rng);
    } else if cur.len() > 1 && rng.random::<f64>() < s.formation_prob {
        let c = cur.iter().fold(Vec3::zero(), |a, l| a + l.p) * T::lit(1.0 / cur.len() as f64);
        let t = gauss3::<T>(rng, sp);
        let r = UnitQuaternion::from_rotation_vector(gauss3::<T>(rng, sr));
        for l in next.iter_mut() {
            *l = Pose::new(c + r.rotate(l.p - c) + t, r.mul(&l.q));
        }
    } else {
        for l in next.iter_mut() {
            let dq = UnitQuaternion::from_rotation_vector(gauss3::<T>(rng, sr));
            *l = Pose::new(l.p + gauss3::<T>(rng, sp), dq.mul(&l.q));
        }
    }
    next
}

/// One annealing chain with its own random stream (`seed + chain`).
pub fn run_chain<T: Real>(
    query: &QueryDensity<T>,
    config: &ConfigurationModel<T>,
    params: &TransferParams<T>,
    chain: usize,
) -> ChainReport<T> {
    let s = &params.schedule;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(chain as u64));
    let mut cur: Vec<Pose<T>> =
        query.links.iter().map(|l| l.kernels[l.sample_index(&mut rng)].pose).collect();
    let mut cur_lj = log_j_unchecked(&formation(&cur, config), query, config);
    let mut best = cur.clone();
    let mut best_lj = cur_lj;
    let mut trace = Vec::with_capacity(s.steps + 1);
    trace.push(best_lj);
    for step in 0..s.steps {
        let temp = s.t0 * s.cooling.powi(step as i32);
        let scale = (temp / s.t0).max(s.min_scale);
        let next = propose(&cur, query, params, scale, &mut rng);
        let lj = log_j_unchecked(&formation(&next, config), query, config);
        if accept(cur_lj, lj, temp, &mut rng) {
            cur = next;
            cur_lj = lj;
            if cur_lj > best_lj || best_lj == f64::NEG_INFINITY && cur_lj.is_finite() {
                best_lj = cur_lj;
                best = cur.clone();
            }
        }
        trace.push(best_lj);
    }
    ChainReport { best, best_log_j: best_lj, trace }
}

/// Runs `max(k, min_chains)` chains in parallel and returns their deduplicated bests,
/// feasibility flagged, in descending `ln J`.
pub fn optimize<T: Real>(
    query: &QueryDensity<T>,
    config: &ConfigurationModel<T>,
    params: &TransferParams<T>,
    scene: &QueryScene<T>,
    k: usize,
) -> Result<Vec<CandidateGrasp<T>>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    params.validate()?;
    let chains = k.max(params.min_chains);
    let candidates: Vec<CandidateGrasp<T>> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let r = run_chain(query, config, params, c);
            let cand = CandidateGrasp::new(formation(&r.best, config), r.best_log_j);
            feasibility_filter(cand, &scene.cloud, scene.k_neighbors, params.max_tilt, params.contact_radius)
        })
        .collect();
    Ok(select_top_k(candidates, chains, params.min_separation, params.rot_weight))
}
