//! Exhaustive reference implementations used to check the accelerated paths.

use rayon::prelude::*;

use crate::coverage::CoverageField;
use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};
use crate::mesh_io::{Camera, TriangleMesh};
use crate::placement::{baseline_grid, AssignMode, BasisSet, Provenance};
use crate::raycast::{intersect_triangle, T_MIN_FRACTION};
use crate::scalar::Real;

/// Plain Möller–Trumbore, independent of the watertight test in `raycast`.
fn moller_trumbore(o: Vec3<f64>, d: Vec3<f64>, t: &[Vec3<f64>; 3]) -> Option<f64> {
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let p = d.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let s = o - t[0];
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = d.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(q) * inv)
}

/// Shadow-ray visibility against every triangle, with the frustum
/// computed directly from the pose matrix.
pub fn brute_force_visibility<T: Real>(mesh: &TriangleMesh<T>, camera: &Camera<T>, x: Vec3<T>, n: Vec3<T>, eps_occ: T) -> bool {
    let x = x.cast::<f64>();
    let n = n.cast::<f64>();
    let m = camera.cam_to_world().to_row_major().map(|v| v.as_f64());
    let c = Vec3::new(m[3], m[7], m[11]);
    if n.dot(c - x) <= 0.0 {
        return false;
    }
    let r = x - c;
    // Columns of the rotation are the camera axes in world space.
    let axis = |j: usize| Vec3::new(m[j], m[4 + j], m[8 + j]);
    let (xc, yc, zc) = (r.dot(axis(0)), r.dot(axis(1)), r.dot(axis(2)));
    if zc <= 0.0 {
        return false;
    }
    let k = camera.intrinsics;
    let px = k.fx.as_f64() * xc / zc + k.cx.as_f64();
    let py = k.fy.as_f64() * yc / zc + k.cy.as_f64();
    let u = 2.0 * (px + 0.5) / k.width as f64 - 1.0;
    let v = 2.0 * (py + 0.5) / k.height as f64 - 1.0;
    if u.abs() > 1.0 || v.abs() > 1.0 {
        return false;
    }
    let len = r.norm();
    let d = r / len;
    let bbox = mesh.bbox();
    let t_min = T_MIN_FRACTION * bbox.diagonal().as_f64();
    let t_max = len - eps_occ.as_f64();
    !(0..mesh.triangle_count()).any(|i| {
        let tri = mesh.triangle(i).map(|p| p.cast::<f64>());
        moller_trumbore(c, d, &tri).is_some_and(|t| t > t_min && t < t_max)
    })
}

/// Closest hit over all triangles using the shared ray/triangle primitive;
/// ties go to the lower triangle id.
pub fn brute_force_first_hit<T: Real>(mesh: &TriangleMesh<T>, o: Vec3<T>, d: Vec3<T>, t_min: T, t_max: T) -> Option<(T, u32)> {
    let mut best: Option<(T, u32)> = None;
    for i in 0..mesh.triangle_count() {
        let limit = best.map_or(t_max, |b| b.0);
        if let Some(t) = intersect_triangle(o, d, &mesh.triangle(i), t_min, limit) {
            if best.map_or(true, |b| t < b.0) {
                best = Some((t, i as u32));
            }
        }
    }
    best
}

/// Lowest-energy placement of `count ≤ 2` bases on the cell centers of a
/// `resolution³` lattice over `bounds`, using the same assignment rule and
/// energy as the optimizer.
///
/// Since infeasible points drop out of the energy, a basis hidden behind
/// every sample would trivially score zero. Placements are therefore
/// ranked by the number of infeasible points first and energy second.
/// Remaining ties go to the lexicographically first choice.
pub fn exhaustive_placement<T: Real>(
    field: &CoverageField<T>,
    count: usize,
    resolution: usize,
    bounds: &Aabb<T>,
    eps: T,
    mode: AssignMode,
) -> Result<(BasisSet<T>, T)> {
    if !(1..=2).contains(&count) {
        return Err(Error::InvalidArgument(format!("exhaustive placement supports 1 or 2 bases, got {count}")));
    }
    if resolution == 0 || resolution > 16 {
        return Err(Error::InvalidArgument(format!("lattice resolution must be in 1..=16, got {resolution}")));
    }
    let lattice: Vec<Vec3<f64>> =
        baseline_grid(bounds, resolution, resolution, resolution)?.positions().iter().map(|p| p.cast()).collect();
    let pts: Vec<Vec3<f64>> = field.samples().points().iter().map(|p| p.cast()).collect();
    let nrm: Vec<Vec3<f64>> = field.samples().normals().iter().map(|p| p.cast()).collect();
    let w: Vec<f64> = field.weights().iter().map(|w| w.as_f64()).collect();
    let eps = eps.as_f64();
    let ns = pts.len();

    // Per lattice point and sample: assignment key (squared distance, or
    // infinity when inadmissible) and energy contribution.
    let table: Vec<(Vec<f64>, Vec<f64>)> = lattice
        .par_iter()
        .map(|&p| {
            let mut key = Vec::with_capacity(ns);
            let mut cost = Vec::with_capacity(ns);
            for i in 0..ns {
                let d = p - pts[i];
                let nd = nrm[i].dot(d);
                let admissible = mode == AssignMode::Unconstrained || nd > 0.0;
                key.push(if admissible { d.norm_squared() } else { f64::INFINITY });
                let s = nd + eps;
                cost.push(if s > 0.0 { w[i] * d.norm().powi(3) / s } else { 0.0 });
            }
            (key, cost)
        })
        .collect();

    let m = lattice.len();
    // (infeasible count, energy, a, b); smaller is better.
    type Score = (usize, f64, usize, usize);
    let better = |x: &Score, y: &Score| x.0 < y.0 || (x.0 == y.0 && x.1 < y.1);
    let pick = |best: Score, cur: Score| if better(&cur, &best) { cur } else { best };
    let worst: Score = (usize::MAX, f64::INFINITY, 0, 0);
    let (_, best_val, a, b) = if count == 1 {
        (0..m)
            .map(|a| {
                let (ka, ca) = &table[a];
                let bad = ka.iter().filter(|k| !k.is_finite()).count();
                let total: f64 = ca.iter().zip(ka).filter(|(_, k)| k.is_finite()).map(|(c, _)| c).sum();
                (bad, total, a, a)
            })
            .fold(worst, pick)
    } else {
        (0..m)
            .into_par_iter()
            .map(|a| {
                let (ka, ca) = &table[a];
                let mut best = worst;
                for b in a + 1..m {
                    let (kb, cb) = &table[b];
                    let mut total = 0.0;
                    let mut bad = 0;
                    for i in 0..ns {
                        if ka[i] <= kb[i] {
                            if ka[i].is_finite() {
                                total += ca[i];
                            } else {
                                bad += 1;
                            }
                        } else {
                            total += cb[i];
                        }
                    }
                    best = pick(best, (bad, total, a, b));
                }
                best
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(worst, pick)
    };
    let chosen = if count == 1 { vec![lattice[a]] } else { vec![lattice[a], lattice[b]] };
    let set = BasisSet::new(chosen.into_iter().map(|p| p.cast()).collect(), Provenance::Exhaustive)?;
    Ok((set, T::lit(best_val)))
}
