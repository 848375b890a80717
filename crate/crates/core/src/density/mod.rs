//! Kernel densities over poses and curvature pairs.
//!
//! A kernel is the product of an isotropic 3-d Gaussian on position, an antipodal
//! von Mises-Fisher factor on orientation and an isotropic 2-d Gaussian on curvature.
//! Everything is evaluated in log space; the linear-scale functions exponentiate.

pub mod special;
mod vmf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use special::{log_sum_exp, LogSumExp};
pub use vmf::{vmf_antipodal_eval, vmf_antipodal_log_eval, vmf_sample};

use crate::cloud::{Curvature2, SurfaceFeature};
use crate::error::{Error, Result};
use crate::geom::{Pose, UnitQuaternion, Vec3};
use crate::scalar::Real;

/// Kernel widths. `sigma_q` is the vMF concentration: larger is tighter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bandwidths<T> {
    pub sigma_p: T,
    pub sigma_q: T,
    pub sigma_r: T,
}

impl<T: Real> Bandwidths<T> {
    pub fn new(sigma_p: T, sigma_q: T, sigma_r: T) -> Result<Self> {
        for (name, v) in [("sigma_p", sigma_p), ("sigma_q", sigma_q), ("sigma_r", sigma_r)] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { sigma_p, sigma_q, sigma_r })
    }
}

/// Isotropic Gaussian density in `x.len()` dimensions, log scale.
pub fn gaussian_log_eval<T: Real>(x: &[T], mu: &[T], sigma: T) -> T {
    debug_assert_eq!(x.len(), mu.len());
    let d2: T = x.iter().zip(mu).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
    gaussian_log_eval_sq(d2, sigma, x.len())
}

pub fn gaussian_eval<T: Real>(x: &[T], mu: &[T], sigma: T) -> T {
    gaussian_log_eval(x, mu, sigma).exp()
}

/// Log Gaussian from a squared distance.
#[inline]
pub fn gaussian_log_eval_sq<T: Real>(d2: T, sigma: T, dim: usize) -> T {
    let k = T::from_usize(dim).unwrap_or_else(T::one);
    let var = sigma * sigma;
    -(k * T::lit(0.5)) * (T::TAU() * var).ln() - d2 / (T::lit(2.0) * var)
}

/// Precomputed constants for a position + orientation kernel.
#[derive(Clone, Copy, Debug)]
pub struct PoseKernel<T> {
    sigma_p: T,
    kappa: T,
    log_norm_p: f64,
    inv_two_var: f64,
    log_c4: f64,
}

impl<T: Real> PoseKernel<T> {
    pub fn new(sigma_p: T, kappa: T) -> Self {
        let s = sigma_p.to_f64_lossy();
        let k = kappa.to_f64_lossy();
        Self {
            sigma_p,
            kappa,
            log_norm_p: -1.5 * (std::f64::consts::TAU * s * s).ln(),
            inv_two_var: 1.0 / (2.0 * s * s),
            log_c4: special::log_vmf_normalizer_s3(k),
        }
    }

    pub fn sigma_p(&self) -> T {
        self.sigma_p
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    /// `ln N3(p | mu_p) + ln Theta(q | mu_q)`.
    #[inline]
    pub fn log_eval(&self, x: &Pose<T>, mean: &Pose<T>) -> f64 {
        let d2 = (x.p - mean.p).norm_sq().to_f64_lossy();
        let dot = x.q.dot(&mean.q).to_f64_lossy();
        self.log_norm_p - d2 * self.inv_two_var
            + self.log_c4
            + special::log_cosh(self.kappa.to_f64_lossy() * dot)
    }

    /// `ln Theta(q | mu_q)` alone.
    #[inline]
    pub fn log_rotation(&self, q: &UnitQuaternion<T>, mean: &UnitQuaternion<T>) -> f64 {
        self.log_c4 + special::log_cosh(self.kappa.to_f64_lossy() * q.dot(mean).to_f64_lossy())
    }

    /// Log value at the mean.
    pub fn log_mode(&self) -> f64 {
        self.log_norm_p + self.log_c4 + special::log_cosh(self.kappa.to_f64_lossy())
    }

    /// Perturbs `mean` by a Gaussian position step and a vMF rotation draw.
    pub fn sample<R: Rng + ?Sized>(&self, mean: &Pose<T>, rng: &mut R) -> Pose<T> {
        let s = self.sigma_p.to_f64_lossy();
        let mut step = || T::lit(s * rng.sample::<f64, _>(StandardNormal));
        let dp = Vec3::new(step(), step(), step());
        Pose::new(mean.p + dp, vmf_sample(&mean.q, self.kappa, rng))
    }
}

/// Precomputed constants for the full pose + curvature kernel.
#[derive(Clone, Copy, Debug)]
pub struct FeatureKernelEval<T> {
    pose: PoseKernel<T>,
    sigma_r: T,
    log_norm_r: f64,
    inv_two_var_r: f64,
}

impl<T: Real> FeatureKernelEval<T> {
    pub fn new(bw: &Bandwidths<T>) -> Self {
        let s = bw.sigma_r.to_f64_lossy();
        Self {
            pose: PoseKernel::new(bw.sigma_p, bw.sigma_q),
            sigma_r: bw.sigma_r,
            log_norm_r: -(std::f64::consts::TAU * s * s).ln(),
            inv_two_var_r: 1.0 / (2.0 * s * s),
        }
    }

    pub fn pose_kernel(&self) -> &PoseKernel<T> {
        &self.pose
    }

    #[inline]
    pub fn log_curvature(&self, r: &Curvature2<T>, mean: &Curvature2<T>) -> f64 {
        let d1 = (r.r1 - mean.r1).to_f64_lossy();
        let d2 = (r.r2 - mean.r2).to_f64_lossy();
        self.log_norm_r - (d1 * d1 + d2 * d2) * self.inv_two_var_r
    }

    /// Log of the 2-d curvature Gaussian at its mean.
    pub fn log_curvature_mode(&self) -> f64 {
        self.log_norm_r
    }

    #[inline]
    pub fn log_eval(&self, s: &SurfaceFeature<T>, mean: &SurfaceFeature<T>) -> f64 {
        self.pose.log_eval(&s.pose, &mean.pose) + self.log_curvature(&s.r, &mean.r)
    }

    pub fn sample<R: Rng + ?Sized>(&self, mean: &SurfaceFeature<T>, rng: &mut R) -> SurfaceFeature<T> {
        let pose = self.pose.sample(&mean.pose, rng);
        let s = self.sigma_r.to_f64_lossy();
        let mut step = || T::lit(s * rng.sample::<f64, _>(StandardNormal));
        let r = Curvature2::new(mean.r.r1 + step(), mean.r.r2 + step());
        SurfaceFeature::new(pose, r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureKernel<T: Real> {
    pub mean: SurfaceFeature<T>,
    pub weight: T,
}

/// Full kernel value `N3(p) Theta(q) N2(r)`, ignoring the kernel weight.
pub fn kernel_eval<T: Real>(s: &SurfaceFeature<T>, kernel: &FeatureKernel<T>, bw: &Bandwidths<T>) -> T {
    T::lit(FeatureKernelEval::new(bw).log_eval(s, &kernel.mean).exp())
}

/// Weighted kernel mixture with weights normalized to sum to one.
#[derive(Clone, Debug)]
pub struct MixtureDensity<T: Real> {
    kernels: Vec<FeatureKernel<T>>,
    bandwidths: Bandwidths<T>,
    eval: FeatureKernelEval<T>,
    cumulative: Vec<f64>,
}

impl<T: Real> PartialEq for MixtureDensity<T> {
    fn eq(&self, o: &Self) -> bool {
        self.kernels == o.kernels && self.bandwidths == o.bandwidths
    }
}

impl<T: Real> MixtureDensity<T> {
    /// Normalizes the weights. Fails on an empty list or invalid weights.
    pub fn new(mut kernels: Vec<FeatureKernel<T>>, bandwidths: Bandwidths<T>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::EmptyInput("mixture needs at least one kernel"));
        }
        if kernels.iter().any(|k| !(k.weight >= T::zero() && k.weight.is_finite())) {
            return Err(Error::InvalidParameter("kernel weights must be finite and non-negative".into()));
        }
        let total: f64 = kernels.iter().map(|k| k.weight.to_f64_lossy()).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("kernel weights sum to zero".into()));
        }
        let mut cumulative = Vec::with_capacity(kernels.len());
        let mut acc = 0.0;
        for k in kernels.iter_mut() {
            let w = k.weight.to_f64_lossy() / total;
            k.weight = T::lit(w);
            acc += w;
            cumulative.push(acc);
        }
        let eval = FeatureKernelEval::new(&bandwidths);
        Ok(Self { kernels, bandwidths, eval, cumulative })
    }

    /// Keeps the given weights, which must already sum to one (within 1e-9 for f64).
    /// Used when reloading stored models so that weights round-trip bit for bit.
    pub fn from_normalized(kernels: Vec<FeatureKernel<T>>, bandwidths: Bandwidths<T>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::EmptyInput("mixture needs at least one kernel"));
        }
        if kernels.iter().any(|k| !(k.weight >= T::zero() && k.weight.is_finite())) {
            return Err(Error::InvalidParameter("kernel weights must be finite and non-negative".into()));
        }
        let mut cumulative = Vec::with_capacity(kernels.len());
        let mut acc = 0.0;
        for k in &kernels {
            acc += k.weight.to_f64_lossy();
            cumulative.push(acc);
        }
        if (acc - 1.0).abs() > T::sum_tolerance(kernels.len()) {
            return Err(Error::InvalidParameter(format!("kernel weights sum to {acc}, not 1")));
        }
        let eval = FeatureKernelEval::new(&bandwidths);
        Ok(Self { kernels, bandwidths, eval, cumulative })
    }

    /// One kernel per feature with equal weights.
    pub fn uniform(features: &[SurfaceFeature<T>], bandwidths: Bandwidths<T>) -> Result<Self> {
        let kernels = features.iter().map(|f| FeatureKernel { mean: *f, weight: T::one() }).collect();
        Self::new(kernels, bandwidths)
    }

    pub fn kernels(&self) -> &[FeatureKernel<T>] {
        &self.kernels
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn bandwidths(&self) -> &Bandwidths<T> {
        &self.bandwidths
    }

    pub fn kernel_eval(&self) -> &FeatureKernelEval<T> {
        &self.eval
    }

    pub fn log_eval(&self, s: &SurfaceFeature<T>) -> f64 {
        let mut acc = LogSumExp::default();
        for k in &self.kernels {
            let w = k.weight.to_f64_lossy();
            if w > 0.0 {
                acc.add(w.ln() + self.eval.log_eval(s, &k.mean));
            }
        }
        acc.value()
    }

    /// `ln sum_i w_i N2(r | r_i)`.
    pub fn log_marginal_curvature(&self, r: &Curvature2<T>) -> f64 {
        let mut acc = LogSumExp::default();
        for k in &self.kernels {
            let w = k.weight.to_f64_lossy();
            if w > 0.0 {
                acc.add(w.ln() + self.eval.log_curvature(r, &k.mean.r));
            }
        }
        acc.value()
    }

    /// Index of a kernel drawn with probability equal to its weight.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        self.cumulative.partition_point(|&c| c <= u).min(self.kernels.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SurfaceFeature<T> {
        let i = self.sample_index(rng);
        self.eval.sample(&self.kernels[i].mean, rng)
    }
}

pub fn mixture_eval<T: Real>(d: &MixtureDensity<T>, s: &SurfaceFeature<T>) -> T {
    T::lit(d.log_eval(s).exp())
}

pub fn mixture_log_eval<T: Real>(d: &MixtureDensity<T>, s: &SurfaceFeature<T>) -> T {
    T::lit(d.log_eval(s))
}

/// One draw from `d`, reproducible for a given seed.
pub fn mixture_sample<T: Real>(d: &MixtureDensity<T>, seed: u64) -> SurfaceFeature<T> {
    d.sample(&mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn marginal_curvature_eval<T: Real>(d: &MixtureDensity<T>, r: &Curvature2<T>) -> T {
    T::lit(d.log_marginal_curvature(r).exp())
}
