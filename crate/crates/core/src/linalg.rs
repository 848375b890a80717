//! Small dense linear algebra: symmetric 3x3 eigen-decomposition and square solves.

use crate::geom::{Mat3, Vec3};
use crate::scalar::Real;

/// Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
///
/// Eigenvalues are returned in ascending order; `vectors[i]` pairs with `values[i]`.
pub fn symmetric_eigen3<T: Real>(m: &Mat3<T>) -> ([T; 3], [Vec3<T>; 3]) {
    let mut a = *m;
    let mut v: Mat3<T> = [
        [T::one(), T::zero(), T::zero()],
        [T::zero(), T::one(), T::zero()],
        [T::zero(), T::zero(), T::one()],
    ];
    let scale = a.iter().flatten().fold(T::zero(), |acc, x| acc.max(x.abs()));
    if scale > T::zero() {
        for _sweep in 0..64 {
            let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
            if off <= scale * T::epsilon() * T::lit(0.5) {
                break;
            }
            for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
                if a[p][q].abs() <= T::min_positive_value() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..3 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..3 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.map(|i| a[i][i]);
    let vectors = order.map(|i| Vec3::new(v[0][i], v[1][i], v[2][i]));
    (values, vectors)
}

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
///
/// `a` is row-major `n x n`. Returns `None` when a pivot falls below `rel_tol` times
/// the largest absolute entry of `a`.
pub fn solve<T: Real>(a: &mut [T], b: &mut [T], n: usize, rel_tol: T) -> Option<Vec<T>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale = a.iter().fold(T::zero(), |acc, x| acc.max(x.abs()));
    if !(scale > T::zero()) || !scale.is_finite() {
        return None;
    }
    let tol = scale * rel_tol;
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() <= tol {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[r * n + k] -= f * v;
            }
            let bv = b[col];
            b[r] -= f * bv;
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for k in r + 1..n {
            s -= a[r * n + k] * x[k];
        }
        x[r] = s / a[r * n + r];
    }
    Some(x)
}

pub fn solve3<T: Real>(m: &Mat3<T>, rhs: Vec3<T>, rel_tol: T) -> Option<Vec3<T>> {
    let mut a: Vec<T> = m.iter().flatten().copied().collect();
    let mut b = vec![rhs.x, rhs.y, rhs.z];
    solve(&mut a, &mut b, 3, rel_tol).map(|x| Vec3::new(x[0], x[1], x[2]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal() {
        let m: [[f64; 3]; 3] = [[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]];
        let (vals, vecs) = symmetric_eigen3(&m);
        assert_eq!(vals, [1.0, 2.0, 3.0]);
        assert!((vecs[0].y.abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let m: [[f64; 3]; 3] = [[4.0, 1.0, -2.0], [1.0, 2.0, 0.5], [-2.0, 0.5, 3.0]];
        let (vals, vecs) = symmetric_eigen3(&m);
        for (l, v) in vals.iter().zip(vecs.iter()) {
            let mv = Vec3::new(
                m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
            );
            assert!((mv - *v * *l).norm() < 1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        // trace and determinant are preserved
        assert!((vals.iter().sum::<f64>() - 9.0).abs() < 1e-12);
        let det = 4.0 * (2.0 * 3.0 - 0.25) - 1.0 * (3.0 + 1.0) + (-2.0) * (0.5 + 4.0);
        assert!((vals[0] * vals[1] * vals[2] - det).abs() < 1e-10);
    }

    #[test]
    fn solve_small_system() {
        let mut a: Vec<f64> = vec![2.0, 1.0, -1.0, -3.0, -1.0, 2.0, -2.0, 1.0, 2.0];
        let mut b: Vec<f64> = vec![8.0, -11.0, -3.0];
        let x = solve(&mut a, &mut b, 3, 1e-12).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
        assert!((x[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_system_is_rejected() {
        let mut a: Vec<f64> = vec![1.0, 2.0, 2.0, 4.0];
        let mut b = vec![1.0, 2.0];
        assert!(solve(&mut a, &mut b, 2, 1e-12).is_none());
    }
}
