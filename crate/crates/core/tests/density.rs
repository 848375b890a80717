use aerocontact::cloud::{Curvature2, SurfaceFeature};
use aerocontact::density::{
    gaussian_eval, kernel_eval, marginal_curvature_eval, mixture_eval, mixture_log_eval, mixture_sample,
    vmf_antipodal_eval, vmf_sample, Bandwidths, FeatureKernel, MixtureDensity,
};
use aerocontact::geom::{Pose, UnitQuaternion, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn bw() -> Bandwidths<f64> {
    Bandwidths::new(0.01, 100.0, 10.0).unwrap()
}

fn uniform_quat(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
    loop {
        let g: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        if let Some(q) = UnitQuaternion::new(g[0], g[1], g[2], g[3]) {
            return q;
        }
    }
}

fn feature(rng: &mut ChaCha8Rng, spread: f64) -> SurfaceFeature<f64> {
    let p = Vec3::new(rng.random_range(-spread..spread), rng.random_range(-spread..spread), rng.random_range(-spread..spread));
    let r1: f64 = rng.random_range(0.0..30.0);
    SurfaceFeature::new(Pose::new(p, uniform_quat(rng)), Curvature2::new(r1, rng.random_range(0.0..r1)))
}

fn mixture(n: usize, seed: u64) -> MixtureDensity<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kernels = (0..n).map(|_| FeatureKernel { mean: feature(&mut rng, 0.05), weight: rng.random_range(0.1..2.0) }).collect();
    MixtureDensity::new(kernels, bw()).unwrap()
}

#[test]
fn kernel_is_the_product_of_its_factors() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let b = Bandwidths::new(0.05, 4.0, 10.0).unwrap();
    for _ in 0..200 {
        let m = feature(&mut rng, 0.05);
        let s = feature(&mut rng, 0.05);
        let k = FeatureKernel { mean: m, weight: 1.0 };
        let direct = gaussian_eval(&s.pose.p.to_array(), &m.pose.p.to_array(), b.sigma_p)
            * vmf_antipodal_eval(&s.pose.q, &m.pose.q, b.sigma_q)
            * gaussian_eval(&s.r.to_array(), &m.r.to_array(), b.sigma_r);
        let v = kernel_eval(&s, &k, &b);
        assert!((v - direct).abs() <= 1e-12 * direct.max(1e-300), "{v} vs {direct}");
    }
}

#[test]
fn gaussian_one_sigma_and_quadrature() {
    let mode = gaussian_eval(&[0.0, 0.0], &[0.0, 0.0], 0.3);
    let one = gaussian_eval(&[0.3, 0.0], &[0.0, 0.0], 0.3);
    assert!((one / mode - (-0.5f64).exp()).abs() < 1e-14);
    // midpoint rule over a 6-sigma box
    let (s, n) = (0.2, 400);
    let h = 12.0 * s / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = [-6.0 * s + (i as f64 + 0.5) * h, -6.0 * s + (j as f64 + 0.5) * h];
            total += gaussian_eval(&x, &[0.0, 0.0], s) * h * h;
        }
    }
    assert!((total - 1.0).abs() < 1e-3);
}

#[test]
fn vmf_integrates_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mu = UnitQuaternion::from_axis_angle(Vec3::new(0.2, 1.0, -0.3), 0.8);
    let area = 2.0 * std::f64::consts::PI.powi(2);
    for kappa in [0.5, 2.0, 8.0] {
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| vmf_antipodal_eval(&uniform_quat(&mut rng), &mu, kappa)).sum::<f64>() / n as f64;
        assert!((mean * area - 1.0).abs() < 0.02, "kappa {kappa}: {}", mean * area);
    }
}

/// `E|q . mu|` under the antipodal density, by quadrature of the marginal
/// `cosh(k t) sqrt(1 - t^2)` on `[-1, 1]`.
fn mean_abs_dot(kappa: f64) -> f64 {
    let n = 200_000;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        let t = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
        // shift by the peak to avoid overflow
        let w = ((kappa * t).abs() - kappa).exp() * (1.0 + (-2.0 * (kappa * t).abs()).exp()) * (1.0 - t * t).sqrt();
        num += w * t.abs();
        den += w;
    }
    num / den
}

#[test]
fn vmf_sampler_matches_concentration() {
    let mu = UnitQuaternion::from_axis_angle(Vec3::new(1.0, 0.0, 1.0), 2.0);
    for kappa in [1.0, 10.0, 100.0] {
        let mut rng = ChaCha8Rng::seed_from_u64(kappa as u64);
        let n = 50_000;
        let draws: Vec<f64> = (0..n).map(|_| { let q: UnitQuaternion<f64> = vmf_sample(&mu, kappa, &mut rng); q.dot(&mu).abs() }).collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let sd = (draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64).sqrt();
        let want = mean_abs_dot(kappa);
        assert!((m - want).abs() < 4.0 * sd / (n as f64).sqrt() + 1e-6, "kappa {kappa}: {m} vs {want}");
    }
}

#[test]
fn mixture_weights_sum_to_one() {
    for (n, seed) in [(1, 0), (7, 1), (500, 2)] {
        let d = mixture(n, seed);
        let total: f64 = d.kernels().iter().map(|k| k.weight).sum();
        assert!((total - 1.0).abs() < 1e-9);
        let again = MixtureDensity::from_normalized(d.kernels().to_vec(), bw()).unwrap();
        assert_eq!(again, d);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let feats: Vec<_> = (0..33).map(|_| feature(&mut rng, 0.1)).collect();
    let u = MixtureDensity::uniform(&feats, bw()).unwrap();
    assert!((u.kernels().iter().map(|k| k.weight).sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(MixtureDensity::<f64>::new(vec![], bw()).is_err());
}

#[test]
fn mixture_equals_explicit_sum() {
    let b = Bandwidths::new(0.05, 3.0, 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let kernels: Vec<_> = (0..40).map(|_| FeatureKernel { mean: feature(&mut rng, 0.05), weight: rng.random_range(0.1..1.0) }).collect();
    let d = MixtureDensity::new(kernels, b).unwrap();
    for _ in 0..50 {
        let s = feature(&mut rng, 0.05);
        let direct: f64 = d.kernels().iter().map(|k| k.weight * kernel_eval(&s, k, &b)).sum();
        let v = mixture_eval(&d, &s);
        assert!((v - direct).abs() <= 1e-12 * direct.max(1e-300));
        let r_direct: f64 =
            d.kernels().iter().map(|k| k.weight * gaussian_eval(&s.r.to_array(), &k.mean.r.to_array(), b.sigma_r)).sum();
        assert!((marginal_curvature_eval(&d, &s.r) - r_direct).abs() <= 1e-12 * r_direct);
    }
}

#[test]
fn mixture_log_eval_survives_underflow() {
    let d = mixture(20, 4);
    let mut far = d.kernels()[0].mean;
    far.pose.p += Vec3::new(5.0, 0.0, 0.0);
    let l = mixture_log_eval(&d, &far);
    assert!(l.is_finite() && l < -1e4);
    assert_eq!(mixture_eval(&d, &far), 0.0);
}

#[test]
fn far_position_is_negligible() {
    let m = SurfaceFeature::new(Pose::identity(), Curvature2::new(1.0, 0.5));
    let k = FeatureKernel { mean: m, weight: 1.0 };
    let mut s = m;
    s.pose.p = Vec3::new(0.11, 0.0, 0.0);
    assert!(kernel_eval(&s, &k, &bw()) < 1e-20 * kernel_eval(&m, &k, &bw()));
}

#[test]
fn sampling_follows_weights() {
    let b = bw();
    let kernels: Vec<_> = [0.1, 0.2, 0.3, 0.4]
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let mean = SurfaceFeature::new(Pose::from_translation(Vec3::new(i as f64, 0.0, 0.0)), Curvature2::new(0.0, 0.0));
            FeatureKernel { mean, weight: w }
        })
        .collect();
    let d = MixtureDensity::new(kernels, b).unwrap();
    let n = 40_000;
    let mut counts = [0usize; 4];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..n {
        counts[d.sample_index(&mut rng)] += 1;
    }
    for (c, w) in counts.iter().zip([0.1, 0.2, 0.3, 0.4]) {
        let sd = (w * (1.0 - w) / n as f64).sqrt();
        assert!((*c as f64 / n as f64 - w).abs() < 4.0 * sd);
    }
    // a draw lands near its kernel
    let s = mixture_sample(&d, 3);
    assert!((s.pose.p.x - s.pose.p.x.round()).abs() < 0.1);
    assert_eq!(mixture_sample(&d, 3), s);
}

#[test]
fn collapsed_bandwidth_returns_a_kernel_mean() {
    let b = Bandwidths::new(1e-9, 1e12, 1e-9).unwrap();
    let d = MixtureDensity::new(mixture(5, 6).kernels().to_vec(), b).unwrap();
    let s = mixture_sample(&d, 1);
    let hit = d.kernels().iter().any(|k| (k.mean.pose.p - s.pose.p).norm() < 1e-6 && k.mean.pose.q.dot(&s.pose.q).abs() > 1.0 - 1e-6);
    assert!(hit);
}

#[test]
fn resampled_curvature_mean_matches() {
    let d = mixture(30, 9);
    let mean: f64 = d.kernels().iter().map(|k| k.weight * k.mean.r.r1).sum();
    let var: f64 = d.kernels().iter().map(|k| k.weight * ((k.mean.r.r1 - mean).powi(2) + 100.0)).sum();
    let n = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let m: f64 = (0..n).map(|_| d.sample(&mut rng).r.r1).sum::<f64>() / n as f64;
    assert!((m - mean).abs() < 3.0 * (var / n as f64).sqrt());
}

proptest! {
    #[test]
    fn evaluation_ignores_quaternion_sign(seed in 0u64..1000) {
        let d = mixture(10, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let s = feature(&mut rng, 0.05);
        let mut t = s;
        t.pose.q = s.pose.q.neg();
        let (a, b) = (mixture_log_eval(&d, &s), mixture_log_eval(&d, &t));
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}
