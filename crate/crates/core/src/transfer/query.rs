//! Query density: where on the new payload each link is likely to go.
//!
//! For every link, candidate contact regions are located from salient task features of
//! the new cloud (through the stored task offsets), query features are drawn inside
//! those regions, and a pose kernel is placed at `v ∘ u` with `u` drawn from the
//! contact model. Each kernel is weighted by how well the feature matches the contact
//! and object curvature models and by the saliency of the task features that led to it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{QueryScene, TransferParams};
use crate::cloud::SurfaceFeature;
use crate::density::{FeatureKernelEval, LogSumExp, PoseKernel};
use crate::error::{Error, Result};
use crate::geom::{compose, inverse, Mat3, Pose, Vec3};
use crate::linalg::solve3;
use crate::models::{ContactModel, ObjectModel, TaskModel};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueryKernel<T: Real> {
    pub pose: Pose<T>,
    pub weight: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryLink<T: Real> {
    pub kernels: Vec<QueryKernel<T>>,
    cumulative: Vec<f64>,
}

impl<T: Real> QueryLink<T> {
    /// Normalizes the weights; fails if they are all zero.
    pub fn new(mut kernels: Vec<QueryKernel<T>>) -> Result<Self> {
        let total: f64 = kernels.iter().map(|k| k.weight.to_f64_lossy()).sum();
        if kernels.is_empty() || !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidParameter("query weights must have a positive finite sum".into()));
        }
        let mut cumulative = Vec::with_capacity(kernels.len());
        let mut acc = 0.0;
        for k in kernels.iter_mut() {
            let w = k.weight.to_f64_lossy() / total;
            k.weight = T::lit(w);
            acc += w;
            cumulative.push(acc);
        }
        Ok(Self { kernels, cumulative })
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        self.cumulative.partition_point(|&c| c <= u).min(self.kernels.len() - 1)
    }

    pub fn best(&self) -> &QueryKernel<T> {
        self.kernels
            .iter()
            .max_by(|a, b| a.weight.partial_cmp(&b.weight).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty")
    }
}

#[derive(Clone, Debug)]
pub struct QueryDensity<T: Real> {
    pub links: Vec<QueryLink<T>>,
    eval: PoseKernel<T>,
}

impl<T: Real> QueryDensity<T> {
    pub fn new(links: Vec<QueryLink<T>>, sigma_p: T, kappa: T) -> Self {
        Self { links, eval: PoseKernel::new(sigma_p, kappa) }
    }

    pub fn pose_kernel(&self) -> &PoseKernel<T> {
        &self.eval
    }

    pub fn log_eval(&self, link: usize, pose: &Pose<T>) -> f64 {
        let mut acc = LogSumExp::default();
        for k in &self.links[link].kernels {
            let w = k.weight.to_f64_lossy();
            if w > 0.0 {
                acc.add(w.ln() + self.eval.log_eval(pose, &k.pose));
            }
        }
        acc.value()
    }

    /// A draw from link `link`'s mixture.
    pub fn sample<R: Rng + ?Sized>(&self, link: usize, rng: &mut R) -> Pose<T> {
        let l = &self.links[link];
        let i = l.sample_index(rng);
        self.eval.sample(&l.kernels[i].pose, rng)
    }
}

pub fn query_log_eval<T: Real>(q: &QueryDensity<T>, link: usize, pose: &Pose<T>) -> T {
    T::lit(q.log_eval(link, pose))
}

pub fn query_eval<T: Real>(q: &QueryDensity<T>, link: usize, pose: &Pose<T>) -> T {
    T::lit(q.log_eval(link, pose).exp())
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    contact: usize,
    feature: usize,
    log_task: f64,
}

fn rng_for(seed: u64, link: usize, item: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((link as u64) << 32) | item as u64);
    rng
}

fn cumulative_from_logs(logs: &[f64]) -> Option<Vec<f64>> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let mut acc = 0.0;
    Some(
        logs.iter()
            .map(|&l| {
                acc += (l - max).exp();
                acc
            })
            .collect(),
    )
}

fn draw(cum: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u = rng.random::<f64>() * cum[cum.len() - 1];
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

/// Precision of one located contact point, in world axes. Across an edge (k1) and
/// along the normal the location is sharp; along the edge (k2) it is only as sharp as
/// the curvature ratio says, and on flat features only the height is informative.
fn region_precision<T: Real>(f: &SurfaceFeature<T>, flat: T) -> Mat3<f64> {
    const FLOOR: f64 = 1e-3;
    let axes = [f.pose.q.axis(0), f.pose.q.axis(1), f.pose.q.axis(2)];
    let (r1, r2) = (f.r.r1.to_f64_lossy(), f.r.r2.to_f64_lossy());
    let gains = if f.r.r1 <= flat { [0.0, 0.0, 1.0] } else { [1.0, (r2 / r1).clamp(0.0, 1.0), 1.0] };
    let mut m = [[0.0; 3]; 3];
    for (a, g) in axes.iter().zip(gains) {
        let a = a.cast::<f64>();
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += g * a[i] * a[j];
            }
        }
    }
    for (i, row) in m.iter_mut().enumerate() {
        row[i] += FLOOR;
    }
    m
}

/// Per link, `n_q` pose kernels with normalized weights.
pub fn build_query_density<T: Real>(
    contact: &ContactModel<T>,
    task: &TaskModel<T>,
    object: &ObjectModel<T>,
    scene: &QueryScene<T>,
    params: &TransferParams<T>,
) -> Result<QueryDensity<T>> {
    params.validate()?;
    let feats = &scene.features;
    if feats.is_empty() {
        return Err(Error::NoFeatures);
    }
    let log_o: Vec<f64> = feats.par_iter().map(|f| object.log_marginal_curvature(&f.r)).collect();
    let task_eval = FeatureKernelEval::new(task.density.bandwidths());
    let task_kernels = task.density.kernels();
    // saliency of a query feature: the task density with position marginalized out
    let log_t: Vec<f64> = feats
        .par_iter()
        .map(|f| {
            let mut acc = LogSumExp::default();
            for tk in task_kernels {
                let w = tk.weight.to_f64_lossy();
                if w > 0.0 {
                    acc.add(
                        w.ln()
                            + task_eval.log_curvature(&f.r, &tk.mean.r)
                            + task_eval.pose_kernel().log_rotation(&f.pose.q, &tk.mean.pose.q),
                    );
                }
            }
            acc.value()
        })
        .collect();
    let task_cum = cumulative_from_logs(&log_t);
    let contact_eval = FeatureKernelEval::new(&contact.bandwidths);
    let contact_pose = *contact_eval.pose_kernel();
    let log_n2_mode = contact_eval.log_curvature_mode();
    let log_floor = params.match_floor.ln();

    let mut links = Vec::with_capacity(contact.links.len());
    for (n, link) in contact.links.iter().enumerate() {
        let log_m: Vec<f64> = feats.par_iter().map(|f| contact.log_marginal_curvature(n, &f.r)).collect();

        let candidates: Vec<Candidate> = (0..params.n_i)
            .into_par_iter()
            .filter_map(|c| {
                let mut rng = rng_for(params.seed, n, c);
                let contact_idx = link.sample_index(&mut rng);
                if params.ablate_task {
                    let feature = rng.random_range(0..feats.len());
                    return Some(Candidate { contact: contact_idx, feature, log_task: 0.0 });
                }
                let task_cum = task_cum.as_ref()?;
                let offsets = contact.offsets_for(link.kernels[contact_idx].source);
                if offsets.is_empty() {
                    return None;
                }
                let mut prec = [[0.0f64; 3]; 3];
                let mut rhs = Vec3::<f64>::zero();
                let mut task_acc = LogSumExp::default();
                let mut used = 0;
                for _ in 0..params.n_j {
                    let f = draw(task_cum, &mut rng);
                    let s = &feats[f];
                    // which demonstrated task feature does this one look like?
                    let compat: Vec<f64> = offsets
                        .iter()
                        .map(|o| {
                            let tk = &task_kernels[o.j];
                            let w = tk.weight.to_f64_lossy();
                            if w > 0.0 {
                                w.ln()
                                    + task_eval.log_curvature(&s.r, &tk.mean.r)
                                    + task_eval.pose_kernel().log_rotation(&s.pose.q, &tk.mean.pose.q)
                            } else {
                                f64::NEG_INFINITY
                            }
                        })
                        .collect();
                    let Some(cum) = cumulative_from_logs(&compat) else { continue };
                    let o = &offsets[draw(&cum, &mut rng)];
                    let located = compose(&s.pose, &inverse(&o.u)).p.cast::<f64>();
                    let lam = region_precision(s, params.flat_curvature);
                    for i in 0..3 {
                        for j in 0..3 {
                            prec[i][j] += lam[i][j];
                        }
                    }
                    rhs += Vec3::new(
                        lam[0][0] * located.x + lam[0][1] * located.y + lam[0][2] * located.z,
                        lam[1][0] * located.x + lam[1][1] * located.y + lam[1][2] * located.z,
                        lam[2][0] * located.x + lam[2][1] * located.y + lam[2][2] * located.z,
                    );
                    task_acc.add(log_t[f]);
                    used += 1;
                }
                if used == 0 {
                    return None;
                }
                let center = solve3(&prec, rhs, 1e-12)?.cast::<T>();
                let near = scene.feature_tree().within_radius(center, params.region_radius);
                let feature = if near.is_empty() {
                    scene.feature_tree().nearest(center)?.0
                } else {
                    near[rng.random_range(0..near.len())]
                };
                Some(Candidate { contact: contact_idx, feature, log_task: task_acc.value() })
            })
            .collect();
        if candidates.is_empty() {
            return Err(Error::AllZeroWeights { link: n });
        }

        let kernels: Vec<(Pose<T>, f64)> = (0..params.n_q)
            .into_par_iter()
            .map(|k| {
                let cand = candidates[k % candidates.len()];
                let mut rng = rng_for(params.seed, n, params.n_i + k);
                let s = &feats[cand.feature];
                let stored = &link.kernels[cand.contact];
                let u = contact_pose.sample(&stored.u, &mut rng);
                let pose = compose(&s.pose, &u);
                let matched = log_m[cand.feature] + log_o[cand.feature] - 2.0 * log_n2_mode;
                if matched < log_floor {
                    return (pose, f64::NEG_INFINITY);
                }
                let mut lw = contact.log_eval(n, &u, &s.r) + log_o[cand.feature];
                if !params.ablate_task {
                    lw += cand.log_task;
                }
                (pose, lw)
            })
            .collect();
        let z = crate::density::log_sum_exp(kernels.iter().map(|k| k.1));
        if z == f64::NEG_INFINITY || !z.is_finite() {
            return Err(Error::AllZeroWeights { link: n });
        }
        let kernels = kernels.into_iter().map(|(pose, lw)| QueryKernel { pose, weight: T::lit((lw - z).exp()) }).collect();
        links.push(QueryLink::new(kernels)?);
    }
    Ok(QueryDensity::new(links, params.query_sigma_p, params.query_kappa))
}
