//! Deterministic synthetic point clouds: planes, boxes, plates, spheres, cylinders and
//! triangular slabs. Used by the test corpus and handy for trying the CLI.

use crate::geom::Vec3;
use crate::scalar::Real;

fn lin(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    let step = if n > 1 { (b - a) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| if i + 1 == n { b } else { a + step * i as f64 })
}

fn steps(len: f64, spacing: f64) -> usize {
    ((len / spacing).round() as usize).max(1) + 1
}

fn v<T: Real>(x: f64, y: f64, z: f64) -> Vec3<T> {
    Vec3::new(T::lit(x), T::lit(y), T::lit(z))
}

/// Square grid in the plane `z = z0`, centered on the origin.
pub fn plane<T: Real>(size: f64, spacing: f64, z0: f64) -> Vec<Vec3<T>> {
    let n = steps(size, spacing);
    let h = size / 2.0;
    lin(-h, h, n).flat_map(|x| lin(-h, h, n).map(move |y| v(x, y, z0))).collect()
}

/// Surface of an axis-aligned box `wx x wy x wz` whose top face is at `z = 0`
/// and whose footprint is centered on the origin.
pub fn box_surface<T: Real>(wx: f64, wy: f64, wz: f64, spacing: f64) -> Vec<Vec3<T>> {
    let (hx, hy) = (wx / 2.0, wy / 2.0);
    let (nx, ny, nz) = (steps(wx, spacing), steps(wy, spacing), steps(wz, spacing));
    let mut out = Vec::new();
    for z in [0.0, -wz] {
        for x in lin(-hx, hx, nx) {
            for y in lin(-hy, hy, ny) {
                out.push(v(x, y, z));
            }
        }
    }
    // side walls without their top and bottom rows, which the faces already hold
    let zs: Vec<f64> = lin(-wz, 0.0, nz).collect();
    let inner = &zs[1..zs.len() - 1];
    for &z in inner {
        for x in lin(-hx, hx, nx) {
            out.push(v(x, -hy, z));
            out.push(v(x, hy, z));
        }
        let ys: Vec<f64> = lin(-hy, hy, ny).collect();
        for &y in &ys[1..ys.len() - 1] {
            out.push(v(-hx, y, z));
            out.push(v(hx, y, z));
        }
    }
    out
}

/// Square plate of side `size` and the given thickness, top face at `z = 0`.
pub fn plate<T: Real>(size: f64, thickness: f64, spacing: f64) -> Vec<Vec3<T>> {
    box_surface(size, size, thickness, spacing)
}

/// Near-uniform sphere sampling on a Fibonacci lattice.
pub fn sphere<T: Real>(radius: f64, n: usize, center: [f64; 3]) -> Vec<Vec3<T>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            v(center[0] + radius * r * t.cos(), center[1] + radius * r * t.sin(), center[2] + radius * z)
        })
        .collect()
}

/// Lateral surface of a cylinder around the z axis, `z` in `[-h/2, h/2]`.
pub fn cylinder<T: Real>(radius: f64, height: f64, around: usize, along: usize) -> Vec<Vec3<T>> {
    let mut out = Vec::with_capacity(around * along);
    for z in lin(-height / 2.0, height / 2.0, along) {
        for k in 0..around {
            let t = std::f64::consts::TAU * k as f64 / around as f64;
            out.push(v(radius * t.cos(), radius * t.sin(), z));
        }
    }
    out
}

/// Corners of an equilateral triangle with the given side, centroid at the origin,
/// one corner on +y.
pub fn triangle_corners(side: f64) -> [[f64; 2]; 3] {
    let r = side / 3f64.sqrt();
    [[0.0, r], [-side / 2.0, -r / 2.0], [side / 2.0, -r / 2.0]]
}

/// Solid equilateral-triangle slab, top face at `z = 0`.
pub fn triangle_slab<T: Real>(side: f64, thickness: f64, spacing: f64) -> Vec<Vec3<T>> {
    let c = triangle_corners(side);
    let n = steps(side, spacing) - 1;
    let mut out = Vec::new();
    for z in [0.0, -thickness] {
        for i in 0..=n {
            for j in 0..=(n - i) {
                let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
                let x = c[0][0] + a * (c[1][0] - c[0][0]) + b * (c[2][0] - c[0][0]);
                let y = c[0][1] + a * (c[1][1] - c[0][1]) + b * (c[2][1] - c[0][1]);
                out.push(v(x, y, z));
            }
        }
    }
    let nz = steps(thickness, spacing);
    let zs: Vec<f64> = lin(-thickness, 0.0, nz).collect();
    for &z in &zs[1..zs.len() - 1] {
        for e in 0..3 {
            let (p, q) = (c[e], c[(e + 1) % 3]);
            for t in lin(0.0, 1.0, n + 1).take(n) {
                out.push(v(p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]), z));
            }
        }
    }
    out
}

/// Adds independent uniform jitter of amplitude `amp` to every coordinate
/// (a small linear congruential stream, so the result is reproducible without an RNG).
pub fn jitter<T: Real>(points: &mut [Vec3<T>], amp: f64, seed: u64) {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    for p in points.iter_mut() {
        *p += v(amp * next(), amp * next(), amp * next());
    }
}
