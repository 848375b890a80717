//! Rigid-body algebra: vectors, unit quaternions and SE(3) poses.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn unit_x() -> Self {
        Self::new(T::one(), T::zero(), T::zero())
    }

    pub fn unit_y() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    pub fn unit_z() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist(self, o: Self) -> T {
        (self - o).norm()
    }

    /// Returns `None` for (near) zero vectors.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::tiny() && n.is_finite() {
            Some(self * (T::one() / n))
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::new(
            U::lit(self.x.to_f64_lossy()),
            U::lit(self.y.to_f64_lossy()),
            U::lit(self.z.to_f64_lossy()),
        )
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// Row-major 3x3 matrix.
pub type Mat3<T> = [[T; 3]; 3];

/// Rotation stored as a unit quaternion `(w, x, y, z)`.
///
/// `q` and `-q` are the same rotation, and `==` treats them as equal.
#[derive(Clone, Copy, Debug)]
pub struct UnitQuaternion<T> {
    w: T,
    x: T,
    y: T,
    z: T,
}

impl<T: Real> PartialEq for UnitQuaternion<T> {
    fn eq(&self, o: &Self) -> bool {
        let same = self.w == o.w && self.x == o.x && self.y == o.y && self.z == o.z;
        let flipped = self.w == -o.w && self.x == -o.x && self.y == -o.y && self.z == -o.z;
        same || flipped
    }
}

impl<T: Real> Default for UnitQuaternion<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> UnitQuaternion<T> {
    pub fn identity() -> Self {
        Self { w: T::one(), x: T::zero(), y: T::zero(), z: T::zero() }
    }

    /// Normalizes `(w, x, y, z)`; `None` if the input is zero or not finite.
    pub fn new(w: T, x: T, y: T, z: T) -> Option<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !(n.is_finite() && n > T::tiny()) {
            return None;
        }
        let inv = T::one() / n;
        Some(Self { w: w * inv, x: x * inv, y: y * inv, z: z * inv })
    }

    /// Builds without normalizing. Caller guarantees unit norm.
    pub(crate) fn new_unchecked(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Self {
        let Some(a) = axis.normalized() else {
            return Self::identity();
        };
        let h = angle * T::lit(0.5);
        let s = h.sin();
        Self::new(h.cos(), a.x * s, a.y * s, a.z * s).unwrap_or_default()
    }

    /// Exponential map of a rotation vector (axis times angle).
    pub fn from_rotation_vector(v: Vec3<T>) -> Self {
        let angle = v.norm();
        if angle < T::tiny() {
            return Self::new(T::one(), v.x * T::lit(0.5), v.y * T::lit(0.5), v.z * T::lit(0.5))
                .unwrap_or_default();
        }
        Self::from_axis_angle(v, angle)
    }

    /// Rotation whose matrix has the given columns. Columns must be orthonormal and right-handed.
    pub fn from_columns(c0: Vec3<T>, c1: Vec3<T>, c2: Vec3<T>) -> Self {
        let m = [[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]];
        Self::from_matrix(&m)
    }

    /// Shepperd's method, picking the largest diagonal term for stability.
    pub fn from_matrix(m: &Mat3<T>) -> Self {
        let one = T::one();
        let quarter = T::lit(0.25);
        let tr = m[0][0] + m[1][1] + m[2][2];
        let (w, x, y, z);
        if tr > m[0][0] && tr > m[1][1] && tr > m[2][2] {
            let s = (one + tr).sqrt() * T::lit(2.0);
            w = quarter * s;
            x = (m[2][1] - m[1][2]) / s;
            y = (m[0][2] - m[2][0]) / s;
            z = (m[1][0] - m[0][1]) / s;
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (one + m[0][0] - m[1][1] - m[2][2]).sqrt() * T::lit(2.0);
            w = (m[2][1] - m[1][2]) / s;
            x = quarter * s;
            y = (m[0][1] + m[1][0]) / s;
            z = (m[0][2] + m[2][0]) / s;
        } else if m[1][1] > m[2][2] {
            let s = (one + m[1][1] - m[0][0] - m[2][2]).sqrt() * T::lit(2.0);
            w = (m[0][2] - m[2][0]) / s;
            x = (m[0][1] + m[1][0]) / s;
            y = quarter * s;
            z = (m[1][2] + m[2][1]) / s;
        } else {
            let s = (one + m[2][2] - m[0][0] - m[1][1]).sqrt() * T::lit(2.0);
            w = (m[1][0] - m[0][1]) / s;
            x = (m[0][2] + m[2][0]) / s;
            y = (m[1][2] + m[2][1]) / s;
            z = quarter * s;
        }
        Self::new(w, x, y, z).unwrap_or_default()
    }

    pub fn w(&self) -> T {
        self.w
    }
    pub fn x(&self) -> T {
        self.x
    }
    pub fn y(&self) -> T {
        self.y
    }
    pub fn z(&self) -> T {
        self.z
    }

    pub fn to_array(&self) -> [T; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn neg(&self) -> Self {
        Self { w: -self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn conjugate(&self) -> Self {
        Self { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    /// Hamilton product, renormalized.
    pub fn mul(&self, o: &Self) -> Self {
        let (a, b) = (self, o);
        let w = a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z;
        let x = a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y;
        let y = a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x;
        let z = a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w;
        Self::new(w, x, y, z).unwrap_or_default()
    }

    /// 4D inner product. Its absolute value is sign-invariant.
    #[inline]
    pub fn dot(&self, o: &Self) -> T {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn rotate(&self, v: Vec3<T>) -> Vec3<T> {
        // v + 2w(u x v) + 2 u x (u x v)
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v) * T::lit(2.0);
        v + t * self.w + u.cross(t)
    }

    pub fn to_matrix(&self) -> Mat3<T> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let one = T::one();
        let two = T::lit(2.0);
        [
            [one - two * (y * y + z * z), two * (x * y - w * z), two * (x * z + w * y)],
            [two * (x * y + w * z), one - two * (x * x + z * z), two * (y * z - w * x)],
            [two * (x * z - w * y), two * (y * z + w * x), one - two * (x * x + y * y)],
        ]
    }

    /// Column `i` of the rotation matrix.
    pub fn axis(&self, i: usize) -> Vec3<T> {
        let m = self.to_matrix();
        Vec3::new(m[0][i], m[1][i], m[2][i])
    }

    /// Geodesic angle in [0, π] between the two rotations.
    pub fn angle_to(&self, o: &Self) -> T {
        let rel = self.conjugate().mul(o);
        let v = (rel.x * rel.x + rel.y * rel.y + rel.z * rel.z).sqrt();
        T::lit(2.0) * v.atan2(rel.w.abs())
    }

    /// Logarithm map: rotation vector of the shortest rotation.
    pub fn to_rotation_vector(&self) -> Vec3<T> {
        let s = if self.w < T::zero() { -T::one() } else { T::one() };
        let v = Vec3::new(self.x, self.y, self.z) * s;
        let vn = v.norm();
        if vn < T::tiny() {
            return v * T::lit(2.0);
        }
        let angle = T::lit(2.0) * vn.atan2(self.w.abs());
        v * (angle / vn)
    }

    pub fn cast<U: Real>(&self) -> UnitQuaternion<U> {
        UnitQuaternion::new(
            U::lit(self.w.to_f64_lossy()),
            U::lit(self.x.to_f64_lossy()),
            U::lit(self.y.to_f64_lossy()),
            U::lit(self.z.to_f64_lossy()),
        )
        .unwrap_or_default()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Pose<T: Real> {
    pub p: Vec3<T>,
    pub q: UnitQuaternion<T>,
}

impl<T: Real> Pose<T> {
    pub fn new(p: Vec3<T>, q: UnitQuaternion<T>) -> Self {
        Self { p, q }
    }

    pub fn identity() -> Self {
        Self { p: Vec3::zero(), q: UnitQuaternion::identity() }
    }

    pub fn from_translation(p: Vec3<T>) -> Self {
        Self { p, q: UnitQuaternion::identity() }
    }

    /// `[px, py, pz, qw, qx, qy, qz]`; quaternion is normalized.
    pub fn from_array(a: [T; 7]) -> Option<Self> {
        let p = Vec3::new(a[0], a[1], a[2]);
        if !p.is_finite() {
            return None;
        }
        Some(Self { p, q: UnitQuaternion::new(a[3], a[4], a[5], a[6])? })
    }

    pub fn to_array(&self) -> [T; 7] {
        let q = self.q.to_array();
        [self.p.x, self.p.y, self.p.z, q[0], q[1], q[2], q[3]]
    }

    pub fn transform_point(&self, v: Vec3<T>) -> Vec3<T> {
        self.p + self.q.rotate(v)
    }

    pub fn cast<U: Real>(&self) -> Pose<U> {
        Pose { p: self.p.cast(), q: self.q.cast() }
    }
}

/// Applies `b` in the frame of `a`.
pub fn compose<T: Real>(a: &Pose<T>, b: &Pose<T>) -> Pose<T> {
    Pose { p: a.p + a.q.rotate(b.p), q: a.q.mul(&b.q) }
}

pub fn inverse<T: Real>(a: &Pose<T>) -> Pose<T> {
    let qi = a.q.conjugate();
    Pose { p: -qi.rotate(a.p), q: qi }
}

/// Pose of `target` expressed in `frame`, so that `compose(frame, result) == target`.
pub fn relative_pose<T: Real>(frame: &Pose<T>, target: &Pose<T>) -> Pose<T> {
    let qi = frame.q.conjugate();
    Pose { p: qi.rotate(target.p - frame.p), q: qi.mul(&target.q) }
}

/// Translation distance plus `rot_weight` times the geodesic angle (meters per radian).
pub fn pose_distance<T: Real>(a: &Pose<T>, b: &Pose<T>, rot_weight: T) -> T {
    a.p.dist(b.p) + rot_weight * a.q.angle_to(&b.q)
}

/// Right-handed orthonormal frame around `n` using a fixed reference direction.
/// Returns a tangent vector `t` with `t ⟂ n`, oriented toward +x (or +y when n ∥ x).
pub fn canonical_tangent<T: Real>(n: Vec3<T>) -> Vec3<T> {
    let project = |a: Vec3<T>| (a - n * n.dot(a)).normalized();
    if n.x.abs() < T::lit(0.9) {
        if let Some(t) = project(Vec3::unit_x()) {
            return t;
        }
    }
    project(Vec3::unit_y()).unwrap_or_else(|| project(Vec3::unit_z()).unwrap_or(Vec3::unit_x()))
}
