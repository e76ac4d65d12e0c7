//! Initial and baseline placements.

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};
use crate::mesh_io::{Camera, Trajectory};
use crate::scalar::Real;

use super::{BasisSet, Provenance};

fn check_count(count: usize, available: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::InvalidArgument("basis count must be at least 1".into()));
    }
    if count > available {
        return Err(Error::InvalidArgument(format!("{count} bases requested from {available} cameras")));
    }
    Ok(())
}

/// Farthest point sampling over camera centers.
///
/// Starts from the camera farthest from the centroid and repeatedly adds
/// the center with the largest distance to the chosen set. Ties go to the
/// lower camera id. `seed` is accepted for interface symmetry; the result
/// is fully determined by the trajectory.
pub fn fps_init<T: Real>(trajectory: &Trajectory<T>, count: usize, _seed: u64) -> Result<BasisSet<T>> {
    check_count(count, trajectory.len())?;
    let mut cams: Vec<&Camera<T>> = trajectory.cameras().iter().collect();
    cams.sort_by_key(|c| c.id);
    let pts: Vec<Vec3<T>> = cams.iter().map(|c| c.center()).collect();
    let centroid = pts.iter().copied().sum::<Vec3<T>>() / T::from_usize_lossy(pts.len());

    let argmax = |d: &[T]| {
        let mut best = 0;
        for i in 1..d.len() {
            if d[i] > d[best] {
                best = i;
            }
        }
        best
    };
    let first = argmax(&pts.iter().map(|p| p.distance_squared(centroid)).collect::<Vec<_>>());
    let mut chosen = vec![first];
    let mut min_d: Vec<T> = pts.iter().map(|p| p.distance_squared(pts[first])).collect();
    while chosen.len() < count {
        let next = argmax(&min_d);
        chosen.push(next);
        for (d, p) in min_d.iter_mut().zip(&pts) {
            *d = d.min(p.distance_squared(pts[next]));
        }
    }
    BasisSet::new(chosen.into_iter().map(|i| pts[i]).collect(), Provenance::FpsInit)
}

/// Camera centers at indices `⌊i·n / count⌋`, in trajectory order.
pub fn baseline_trajectory<T: Real>(trajectory: &Trajectory<T>, count: usize) -> Result<BasisSet<T>> {
    let n = trajectory.len();
    check_count(count, n)?;
    let cams = trajectory.cameras();
    BasisSet::new((0..count).map(|i| cams[i * n / count].center()).collect(), Provenance::Trajectory)
}

/// Cell centers of an `nx × ny × nz` lattice over `bbox`, x varying fastest.
pub fn baseline_grid<T: Real>(bbox: &Aabb<T>, nx: usize, ny: usize, nz: usize) -> Result<BasisSet<T>> {
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::InvalidArgument(format!("grid {nx}x{ny}x{nz} has no cells")));
    }
    if bbox.is_empty() {
        return Err(Error::InvalidArgument("grid over an empty box".into()));
    }
    let ext = bbox.extent();
    let center = |i: usize, n: usize, lo: T, e: T| lo + e * (T::from_usize_lossy(2 * i + 1) / T::from_usize_lossy(2 * n));
    let mut out = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                out.push(Vec3::new(
                    center(i, nx, bbox.min.x, ext.x),
                    center(j, ny, bbox.min.y, ext.y),
                    center(k, nz, bbox.min.z, ext.z),
                ));
            }
        }
    }
    BasisSet::new(out, Provenance::Grid)
}

/// Factorization `nx·ny·nz = count` whose cells are closest to cubes
/// (smallest ratio of longest to shortest cell edge). Flat axes are
/// never subdivided unless nothing else works.
pub fn grid_dims_for<T: Real>(count: usize, bbox: &Aabb<T>) -> (usize, usize, usize) {
    let ext = bbox.extent();
    let floor = bbox.diagonal().as_f64().max(1.0) * 1e-9;
    let e = [ext.x.as_f64().max(floor), ext.y.as_f64().max(floor), ext.z.as_f64().max(floor)];
    let mut best = (count.max(1), 1, 1);
    let mut best_score = f64::INFINITY;
    for nx in 1..=count.max(1) {
        if count % nx != 0 {
            continue;
        }
        for ny in 1..=count / nx {
            if (count / nx) % ny != 0 {
                continue;
            }
            let nz = count / nx / ny;
            let cell = [e[0] / nx as f64, e[1] / ny as f64, e[2] / nz as f64];
            let hi = cell.iter().copied().fold(f64::MIN, f64::max);
            let lo = cell.iter().copied().fold(f64::MAX, f64::min);
            let score = hi / lo;
            if score < best_score {
                best_score = score;
                best = (nx, ny, nz);
            }
        }
    }
    best
}
