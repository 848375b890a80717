//! Antipodal von Mises-Fisher kernel on unit quaternions.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use super::special::{log_cosh, log_vmf_normalizer_s3};
use crate::geom::UnitQuaternion;
use crate::scalar::Real;

/// ln of `C4(kappa) cosh(kappa <q, mu>)`: the symmetric pair of vMF densities at `mu`
/// and `-mu`, each carrying half the mass.
pub fn vmf_antipodal_log_eval<T: Real>(q: &UnitQuaternion<T>, mu: &UnitQuaternion<T>, kappa: T) -> T {
    let k = kappa.to_f64_lossy();
    T::lit(log_vmf_normalizer_s3(k) + log_cosh(k * q.dot(mu).to_f64_lossy()))
}

pub fn vmf_antipodal_eval<T: Real>(q: &UnitQuaternion<T>, mu: &UnitQuaternion<T>, kappa: T) -> T {
    vmf_antipodal_log_eval(q, mu, kappa).exp()
}

/// Draw from the vMF on S^3 about `mu` (Wood's rejection sampler for the
/// component along `mu`, uniform direction in the orthogonal complement).
pub fn vmf_sample<T: Real, R: Rng + ?Sized>(mu: &UnitQuaternion<T>, kappa: T, rng: &mut R) -> UnitQuaternion<T> {
    let k = kappa.to_f64_lossy();
    let w = sample_cosine(k, rng);
    let s = (1.0 - w * w).max(0.0).sqrt();
    let mut v = [0.0f64; 3];
    loop {
        for c in v.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            v.iter_mut().for_each(|c| *c /= n);
            break;
        }
    }
    // left-multiplying by mu is an isometry of S^3 taking the identity to mu
    let local = UnitQuaternion::new(T::lit(w), T::lit(s * v[0]), T::lit(s * v[1]), T::lit(s * v[2]))
        .unwrap_or_default();
    mu.mul(&local)
}

fn sample_cosine<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> f64 {
    if kappa <= 0.0 {
        // uniform on S^3: the first coordinate has density ∝ sqrt(1 - w^2)
        let z: f64 = Beta::new(1.5, 1.5).expect("valid beta").sample(rng);
        return 2.0 * z - 1.0;
    }
    let p1 = 3.0; // ambient dimension 4, minus one
    let b = p1 / (2.0 * kappa + (4.0 * kappa * kappa + p1 * p1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + p1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(p1 / 2.0, p1 / 2.0).expect("valid beta");
    loop {
        let z: f64 = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.random();
        if kappa * w + p1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            return w.clamp(-1.0, 1.0);
        }
    }
}
