//! Special functions and log-space accumulation. Computed in f64 regardless of the
//! caller's scalar type.

use std::f64::consts::{LN_2, PI};

/// ln I1(x) for x > 0 (modified Bessel function of the first kind, order one).
pub fn log_bessel_i1(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x <= 30.0 {
        // power series: sum (x/2)^(2m+1) / (m! (m+1)!)
        let h = 0.5 * x;
        let h2 = h * h;
        let mut term = h;
        let mut sum = h;
        let mut m = 0.0;
        loop {
            m += 1.0;
            term *= h2 / (m * (m + 1.0));
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum.ln()
    } else {
        // Hankel expansion with mu = 4 nu^2 = 4, stopped at the smallest term
        let mu = 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for m in 1..60 {
            let odd = (2 * m - 1) as f64;
            let next = -term * (mu - odd * odd) / (m as f64 * 8.0 * x);
            if next.abs() >= term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        x - 0.5 * (2.0 * PI * x).ln() + sum.ln()
    }
}

/// ln C4(kappa): normalizer of the von Mises-Fisher density on the unit 3-sphere,
/// `kappa / (4 pi^2 I1(kappa))`, tending to ln(1/(2 pi^2)) as kappa -> 0.
pub fn log_vmf_normalizer_s3(kappa: f64) -> f64 {
    if kappa < 1e-8 {
        // I1(k) ~ k/2 (1 + k^2/8)
        return -(2.0 * PI * PI).ln() - kappa * kappa / 8.0;
    }
    kappa.ln() - (4.0 * PI * PI).ln() - log_bessel_i1(kappa)
}

/// ln cosh(y) without overflow.
#[inline]
pub fn log_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// Streaming log-sum-exp. `NEG_INFINITY` terms are ignored.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    acc: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self { max: f64::NEG_INFINITY, acc: 0.0 }
    }
}

impl LogSumExp {
    #[inline]
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY || x.is_nan() {
            return;
        }
        if x > self.max {
            self.acc = self.acc * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.acc += (x - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.acc.ln()
        }
    }
}

pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut l = LogSumExp::default();
    for x in xs {
        l.add(x);
    }
    l.value()
}
