//! Contact transfer to a new payload: query density, annealed search, feasibility.

mod anneal;
mod query;
mod report;
mod select;

pub use anneal::{likelihood, optimize, run_chain, CandidateGrasp, ChainReport};
pub use query::{build_query_density, query_eval, query_log_eval, QueryDensity, QueryKernel, QueryLink};
pub use report::{candidates_json, write_candidates, write_density_samples};
pub use select::{feasibility_filter, outward_normal, select_top_k, snap_to_surface};

use crate::cloud::{extract_all, PointCloud, SurfaceFeature};
use crate::error::{Error, Result};
use crate::kdtree::KdTree;
use crate::models::ModelBundle;
use crate::scalar::Real;

/// Simulated-annealing schedule. Temperatures are in log-likelihood units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnealSchedule<T> {
    pub t0: f64,
    pub cooling: f64,
    pub steps: usize,
    /// Probability of jumping one link to a fresh query-density sample.
    pub reanchor_prob: f64,
    /// With several links, probability that a local move shifts the whole formation rigidly.
    pub formation_prob: f64,
    /// Position step at `T = t0`, meters.
    pub position_scale: T,
    /// Rotation step at `T = t0`, radians.
    pub rotation_scale: T,
    /// Step sizes never shrink below this fraction of their initial value.
    pub min_scale: f64,
}

impl<T: Real> Default for AnnealSchedule<T> {
    fn default() -> Self {
        Self {
            t0: 1.0,
            cooling: 0.97,
            steps: 2000,
            reanchor_prob: 0.25,
            formation_prob: 0.5,
            position_scale: T::lit(0.01),
            rotation_scale: T::lit(0.1),
            min_scale: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferParams<T> {
    pub n_i: usize,
    pub n_j: usize,
    pub n_q: usize,
    /// Position bandwidth of the query kernels.
    pub query_sigma_p: T,
    /// Rotation concentration of the query kernels.
    pub query_kappa: T,
    /// Radius around a located contact region from which query features are drawn.
    pub region_radius: T,
    /// Query kernels whose curvature matches the contact and object models worse than
    /// this (relative to a perfect match) get zero weight.
    pub match_floor: f64,
    /// r1 below which a query feature is treated as flat when locating regions.
    pub flat_curvature: T,
    pub schedule: AnnealSchedule<T>,
    /// Lower bound on the number of annealing chains.
    pub min_chains: usize,
    /// Drop the task factor and task-guided region sampling.
    pub ablate_task: bool,
    pub seed: u64,
    pub max_tilt: T,
    pub contact_radius: T,
    pub min_separation: T,
    pub rot_weight: T,
}

impl<T: Real> Default for TransferParams<T> {
    fn default() -> Self {
        Self {
            n_i: 500,
            n_j: 5,
            n_q: 1000,
            query_sigma_p: T::lit(0.01),
            query_kappa: T::lit(100.0),
            region_radius: T::lit(0.02),
            match_floor: 1e-9,
            flat_curvature: T::lit(crate::cloud::UMBILIC_ABS_TOL),
            schedule: AnnealSchedule::default(),
            min_chains: 8,
            ablate_task: false,
            seed: 0,
            max_tilt: T::FRAC_PI_2(),
            contact_radius: T::lit(0.05),
            min_separation: T::lit(0.05),
            rot_weight: T::one(),
        }
    }
}

impl<T: Real> TransferParams<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.n_i == 0 || self.n_j == 0 || self.n_q == 0 {
            return bad("N_i, N_j and N_Q must be positive");
        }
        let s = &self.schedule;
        if !(s.cooling > 0.0 && s.cooling < 1.0) {
            return bad("cooling factor must lie in (0, 1)");
        }
        if !(s.t0 > 0.0) || s.steps == 0 {
            return bad("annealing needs t0 > 0 and at least one step");
        }
        if !(0.0..=1.0).contains(&s.reanchor_prob) || !(0.0..=1.0).contains(&s.formation_prob) {
            return bad("move probabilities must lie in [0, 1]");
        }
        if !(self.query_sigma_p > T::zero() && self.query_kappa > T::zero() && self.region_radius > T::zero()) {
            return bad("query bandwidths and region radius must be positive");
        }
        if !(self.contact_radius > T::zero()) {
            return bad("contact radius must be positive");
        }
        Ok(())
    }
}

/// A query cloud with its surface features precomputed.
#[derive(Clone, Debug)]
pub struct QueryScene<T: Real> {
    pub cloud: PointCloud<T>,
    pub k_neighbors: usize,
    pub features: Vec<SurfaceFeature<T>>,
    /// Cloud index of each feature.
    pub point_of: Vec<usize>,
    feature_tree: KdTree<T>,
}

impl<T: Real> QueryScene<T> {
    pub fn new(cloud: PointCloud<T>, k_neighbors: usize) -> Result<Self> {
        let mut features = Vec::new();
        let mut point_of = Vec::new();
        for (i, f) in extract_all(&cloud, k_neighbors).into_iter().enumerate() {
            if let Some(f) = f {
                features.push(f);
                point_of.push(i);
            }
        }
        if features.is_empty() {
            return Err(Error::NoFeatures);
        }
        let feature_tree = KdTree::new(features.iter().map(|f| f.pose.p).collect());
        Ok(Self { cloud, k_neighbors, features, point_of, feature_tree })
    }

    pub fn feature_tree(&self) -> &KdTree<T> {
        &self.feature_tree
    }
}

/// Ranked candidates from one inference run.
#[derive(Clone, Debug)]
pub struct InferOutcome<T: Real> {
    pub query: QueryDensity<T>,
    /// Every deduplicated chain result, best first, feasibility flagged.
    pub candidates: Vec<CandidateGrasp<T>>,
}

impl<T: Real> InferOutcome<T> {
    /// Best `k` feasible candidates.
    pub fn top_feasible(&self, k: usize) -> Vec<&CandidateGrasp<T>> {
        self.candidates.iter().filter(|c| c.feasible).take(k).collect()
    }
}

/// Builds the query density for `scene` and searches it.
pub fn infer<T: Real>(bundle: &ModelBundle<T>, scene: &QueryScene<T>, params: &TransferParams<T>, k: usize) -> Result<InferOutcome<T>> {
    params.validate()?;
    let query = build_query_density(&bundle.contact, &bundle.task, &bundle.object, scene, params)?;
    let candidates = optimize(&query, &bundle.configuration, params, scene, k)?;
    Ok(InferOutcome { query, candidates })
}
