//! Small fixed-size linear algebra: points, 3×3 matrices, rigid transforms
//! and axis-aligned boxes.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[T; 3]", into = "[T; 3]", bound(serialize = "T: Clone + Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T> From<[T; 3]> for Vec3<T> {
    fn from([x, y, z]: [T; 3]) -> Self {
        Self { x, y, z }
    }
}

impl<T> From<Vec3<T>> for [T; 3] {
    fn from(v: Vec3<T>) -> Self {
        [v.x, v.y, v.z]
    }
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::splat(T::zero())
    }

    #[inline]
    pub fn splat(v: T) -> Self {
        Self::new(v, v, v)
    }

    /// Unit vector along `axis` (0, 1 or 2).
    pub fn axis(axis: usize) -> Self {
        let mut v = Self::zero();
        v[axis] = T::one();
        v
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
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction, or `None` for a zero (or non-finite) vector.
    pub fn try_normalize(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn normalize(self) -> Self {
        self / self.norm()
    }

    #[inline]
    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    #[inline]
    pub fn distance_squared(self, o: Self) -> T {
        (self - o).norm_squared()
    }

    pub fn min_by_component(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max_by_component(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn map(self, f: impl Fn(T) -> T) -> Self {
        Self::new(f(self.x), f(self.y), f(self.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Index of the component with the largest absolute value (lowest index on ties).
    pub fn max_abs_axis(self) -> usize {
        let a = self.map(T::abs);
        if a.x >= a.y && a.x >= a.z {
            0
        } else if a.y >= a.z {
            1
        } else {
            2
        }
    }

    pub fn to_f64(self) -> [f64; 3] {
        [self.x.as_f64(), self.y.as_f64(), self.z.as_f64()]
    }

    pub fn from_f64([x, y, z]: [f64; 3]) -> Self {
        Self::new(T::lit(x), T::lit(y), T::lit(z))
    }

    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::from_f64(self.to_f64())
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    #[inline]
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<T> std::ops::IndexMut<usize> for Vec3<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut T {
        match i {
            0 => &mut self.x,
            1 => &mut self.y,
            2 => &mut self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> SubAssign for Vec3<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> std::iter::Sum for Vec3<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T> {
    pub rows: [Vec3<T>; 3],
}

impl<T: Real> Mat3<T> {
    pub fn identity() -> Self {
        Self::from_rows([Vec3::axis(0), Vec3::axis(1), Vec3::axis(2)])
    }

    pub fn from_rows(rows: [Vec3<T>; 3]) -> Self {
        Self { rows }
    }

    pub fn from_columns(c: [Vec3<T>; 3]) -> Self {
        Self::from_rows([
            Vec3::new(c[0].x, c[1].x, c[2].x),
            Vec3::new(c[0].y, c[1].y, c[2].y),
            Vec3::new(c[0].z, c[1].z, c[2].z),
        ])
    }

    pub fn column(&self, j: usize) -> Vec3<T> {
        Vec3::new(self.rows[0][j], self.rows[1][j], self.rows[2][j])
    }

    pub fn transpose(&self) -> Self {
        Self::from_columns(self.rows)
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        Vec3::new(self.rows[0].dot(v), self.rows[1].dot(v), self.rows[2].dot(v))
    }

    /// `selfᵀ · v` without materializing the transpose.
    #[inline]
    pub fn tr_mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        self.rows[0] * v.x + self.rows[1] * v.y + self.rows[2] * v.z
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        let cols = [o.column(0), o.column(1), o.column(2)];
        Self::from_rows(self.rows.map(|r| Vec3::new(r.dot(cols[0]), r.dot(cols[1]), r.dot(cols[2]))))
    }

    pub fn determinant(&self) -> T {
        self.rows[0].dot(self.rows[1].cross(self.rows[2]))
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_rows(self.rows.map(|r| r * s))
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::from_rows([self.rows[0] + o.rows[0], self.rows[1] + o.rows[1], self.rows[2] + o.rows[2]])
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.determinant();
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        let [a, b, c] = self.rows;
        // Columns of the inverse are the cross products of row pairs.
        let cof = Self::from_columns([b.cross(c), c.cross(a), a.cross(b)]);
        Some(cof.scale(T::one() / det))
    }

    /// Largest absolute entry of `MᵀM − I`.
    pub fn orthonormality_residual(&self) -> T {
        let g = self.transpose().mul_mat(self);
        let mut worst = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((g.rows[i][j] - target).abs());
            }
        }
        worst
    }

    /// Nearest orthogonal matrix via the Newton iteration for the polar factor.
    pub fn orthonormalized(&self) -> Option<Self> {
        let mut r = *self;
        for _ in 0..32 {
            let inv_t = r.inverse()?.transpose();
            let next = r.add(&inv_t).scale(T::lit(0.5));
            let delta = (0..3)
                .map(|i| (next.rows[i] - r.rows[i]).norm())
                .fold(T::zero(), T::max);
            r = next;
            if delta <= T::epsilon() * T::lit(4.0) {
                break;
            }
        }
        Some(r)
    }

    /// Rotation about `axis` (unit) by `angle` radians.
    pub fn rotation(axis: Vec3<T>, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let t = T::one() - c;
        let Vec3 { x, y, z } = axis;
        Self::from_rows([
            Vec3::new(t * x * x + c, t * x * y - s * z, t * x * z + s * y),
            Vec3::new(t * x * y + s * z, t * y * y + c, t * y * z - s * x),
            Vec3::new(t * x * z - s * y, t * y * z + s * x, t * z * z + c),
        ])
    }
}

/// `x ↦ R·x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rigid<T> {
    pub rotation: Mat3<T>,
    pub translation: Vec3<T>,
}

impl<T: Real> Rigid<T> {
    pub fn identity() -> Self {
        Self { rotation: Mat3::identity(), translation: Vec3::zero() }
    }

    pub fn new(rotation: Mat3<T>, translation: Vec3<T>) -> Self {
        Self { rotation, translation }
    }

    #[inline]
    pub fn apply_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation.mul_vec(p) + self.translation
    }

    #[inline]
    pub fn apply_vector(&self, v: Vec3<T>) -> Vec3<T> {
        self.rotation.mul_vec(v)
    }

    /// Inverse map, assuming `rotation` is orthonormal.
    #[inline]
    pub fn inverse_apply_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation.tr_mul_vec(p - self.translation)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Self {
        Self {
            rotation: self.rotation.mul_mat(&inner.rotation),
            translation: self.apply_point(inner.translation),
        }
    }

    /// Row-major 3×4 `[R | t]`.
    pub fn to_row_major(&self) -> [T; 12] {
        let r = &self.rotation.rows;
        let t = self.translation;
        [
            r[0].x, r[0].y, r[0].z, t.x, //
            r[1].x, r[1].y, r[1].z, t.y, //
            r[2].x, r[2].y, r[2].z, t.z,
        ]
    }

    pub fn from_row_major(m: &[T; 12]) -> Self {
        Self {
            rotation: Mat3::from_rows([
                Vec3::new(m[0], m[1], m[2]),
                Vec3::new(m[4], m[5], m[6]),
                Vec3::new(m[8], m[9], m[10]),
            ]),
            translation: Vec3::new(m[3], m[7], m[11]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn new(min: Vec3<T>, max: Vec3<T>) -> Self {
        Self { min, max }
    }

    /// Inverted box that any `grow` overwrites.
    pub fn empty() -> Self {
        Self { min: Vec3::splat(T::infinity()), max: Vec3::splat(T::neg_infinity()) }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3<T>>) -> Self {
        points.into_iter().fold(Self::empty(), |b, p| b.grow(*p))
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    #[must_use]
    pub fn grow(self, p: Vec3<T>) -> Self {
        Self { min: self.min.min_by_component(p), max: self.max.max_by_component(p) }
    }

    #[must_use]
    pub fn union(self, o: &Self) -> Self {
        Self { min: self.min.min_by_component(o.min), max: self.max.max_by_component(o.max) }
    }

    pub fn extent(&self) -> Vec3<T> {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3<T> {
        (self.min + self.max) * T::lit(0.5)
    }

    pub fn diagonal(&self) -> T {
        if self.is_empty() {
            T::zero()
        } else {
            self.extent().norm()
        }
    }

    pub fn longest_axis(&self) -> usize {
        self.extent().max_abs_axis()
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    pub fn contains_box(&self, o: &Self) -> bool {
        self.contains(o.min) && self.contains(o.max)
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn distance_squared(&self, p: Vec3<T>) -> T {
        let d = Vec3::new(
            (self.min.x - p.x).max(T::zero()).max(p.x - self.max.x),
            (self.min.y - p.y).max(T::zero()).max(p.y - self.max.y),
            (self.min.z - p.z).max(T::zero()).max(p.z - self.max.z),
        );
        d.norm_squared()
    }

    /// Slab test. Returns the parametric entry/exit interval clipped to
    /// `[t_min, t_max]`, conservatively widened to absorb rounding.
    #[inline]
    pub fn ray_interval(&self, origin: Vec3<T>, inv_dir: Vec3<T>, t_min: T, t_max: T) -> Option<(T, T)> {
        let mut t0 = t_min;
        let mut t1 = t_max;
        for a in 0..3 {
            let mut near = (self.min[a] - origin[a]) * inv_dir[a];
            let mut far = (self.max[a] - origin[a]) * inv_dir[a];
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            // NaN (0 · ∞) leaves the interval untouched: Float::max/min drop NaN.
            far = far * (T::one() + T::lit(2.0) * T::gamma(3));
            t0 = t0.max(near);
            t1 = t1.min(far);
        }
        (t0 <= t1).then_some((t0, t1))
    }
}
