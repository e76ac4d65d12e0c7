use crate::geom::Vec3;
use crate::scalar::Real;

/// Watertight ray/triangle intersection (shear-and-scale edge functions).
///
/// Rays through a shared edge or vertex hit every incident triangle, and
/// rays lying in the triangle's plane miss. Returns `t` with
/// `t_min < t < t_max`; `dir` need not be normalized.
#[inline]
pub fn intersect_triangle<T: Real>(origin: Vec3<T>, dir: Vec3<T>, tri: &[Vec3<T>; 3], t_min: T, t_max: T) -> Option<T> {
    let kz = dir.max_abs_axis();
    let mut kx = (kz + 1) % 3;
    let mut ky = (kx + 1) % 3;
    if dir[kz] < T::zero() {
        std::mem::swap(&mut kx, &mut ky);
    }
    let sz = T::one() / dir[kz];
    let sx = dir[kx] * sz;
    let sy = dir[ky] * sz;

    let a = tri[0] - origin;
    let b = tri[1] - origin;
    let c = tri[2] - origin;
    let ax = a[kx] - sx * a[kz];
    let ay = a[ky] - sy * a[kz];
    let bx = b[kx] - sx * b[kz];
    let by = b[ky] - sy * b[kz];
    let cx = c[kx] - sx * c[kz];
    let cy = c[ky] - sy * c[kz];

    let u = cx * by - cy * bx;
    let v = ax * cy - ay * cx;
    let w = bx * ay - by * ax;
    let zero = T::zero();
    if (u < zero || v < zero || w < zero) && (u > zero || v > zero || w > zero) {
        return None;
    }
    let det = u + v + w;
    if det == zero {
        return None;
    }
    let t = (u * a[kz] + v * b[kz] + w * c[kz]) * sz / det;
    (t > t_min && t < t_max).then_some(t)
}

/// Closest point on a triangle to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle<T: Real>(p: Vec3<T>, tri: &[Vec3<T>; 3]) -> Vec3<T> {
    let [a, b, c] = *tri;
    let zero = T::zero();
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= zero && d2 <= zero {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= zero && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= zero && d1 >= zero && d3 <= zero {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= zero && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= zero && d2 >= zero && d6 <= zero {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= zero && (d4 - d3) >= zero && (d5 - d6) >= zero {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = T::one() / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}
