//! Queries over a placed basis set: core clustering, nearest bases,
//! blend weights, and perturbation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::Real;

use super::{BasisSet, Provenance};

pub const KMEANS_MAX_ITERATIONS: usize = 100;
pub const KMEANS_SHIFT_TOL: f64 = 1e-9;

fn nearest_center<T: Real>(p: Vec3<T>, centers: &[Vec3<T>]) -> usize {
    let mut best = 0;
    let mut best_d = p.distance_squared(centers[0]);
    for (c, &q) in centers.iter().enumerate().skip(1) {
        let d = p.distance_squared(q);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Lloyd's k-means with k-means++ seeding. Returns a label per point and
/// the cluster centers. A cluster that loses all its points keeps its
/// previous center.
pub fn kmeans<T: Real>(points: &[Vec3<T>], k: usize, seed: u64) -> Result<(Vec<usize>, Vec<Vec3<T>>)> {
    if k == 0 {
        return Err(Error::InvalidArgument("k-means needs k >= 1".into()));
    }
    if k > points.len() {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds {} points", points.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| p.distance_squared(centers[0]).as_f64()).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut idx = d2.iter().rposition(|&d| d > 0.0).expect("positive mass");
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && r < d {
                    idx = i;
                    break;
                }
                r -= d;
            }
            idx
        } else {
            // Every point coincides with a center; duplicates are unavoidable.
            centers.len() % points.len()
        };
        centers.push(points[pick]);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(p.distance_squared(points[pick]).as_f64());
        }
    }

    let mut labels: Vec<usize> = points.iter().map(|&p| nearest_center(p, &centers)).collect();
    for _ in 0..KMEANS_MAX_ITERATIONS {
        let mut sums = vec![Vec3::zero(); k];
        let mut counts = vec![0usize; k];
        for (&l, &p) in labels.iter().zip(points) {
            sums[l] += p;
            counts[l] += 1;
        }
        let mut shift = T::zero();
        for c in 0..k {
            if counts[c] > 0 {
                let next = sums[c] / T::from_usize_lossy(counts[c]);
                shift = shift.max(next.distance(centers[c]));
                centers[c] = next;
            }
        }
        labels = points.iter().map(|&p| nearest_center(p, &centers)).collect();
        if shift < T::lit(KMEANS_SHIFT_TOL) {
            break;
        }
    }
    Ok((labels, centers))
}

/// Clusters basis positions into `k` cores and attaches the labels.
pub fn kmeans_cores<T: Real>(bases: &BasisSet<T>, k: usize, seed: u64) -> Result<BasisSet<T>> {
    let (labels, centers) = kmeans(bases.positions(), k, seed)?;
    bases.clone().with_cores(labels, centers)
}

/// Ids of the `k` nearest bases, nearest first, ties to the lower id.
pub fn nearest_k_bases<T: Real>(query: Vec3<T>, bases: &BasisSet<T>, k: usize) -> Result<Vec<usize>> {
    if k > bases.len() {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds {} bases", bases.len())));
    }
    let mut ids: Vec<(T, usize)> = bases.positions().iter().map(|p| p.distance_squared(query)).zip(0..).collect();
    ids.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1)));
    Ok(ids.into_iter().take(k).map(|(_, i)| i).collect())
}

/// Inverse-distance blend over the two bases nearest to `camera`.
///
/// A single basis gets weight 1; a camera sitting on a basis gives that
/// basis weight 1 and the runner-up 0.
pub fn blend_weights<T: Real>(camera: Vec3<T>, bases: &BasisSet<T>) -> Vec<(usize, T)> {
    if bases.len() == 1 {
        return vec![(0, T::one())];
    }
    let ids = nearest_k_bases(camera, bases, 2).expect("at least two bases");
    let d0 = bases.positions()[ids[0]].distance(camera);
    let d1 = bases.positions()[ids[1]].distance(camera);
    if d0 == T::zero() {
        return vec![(ids[0], T::one()), (ids[1], T::zero())];
    }
    let (a, b) = (T::one() / d0, T::one() / d1);
    vec![(ids[0], a / (a + b)), (ids[1], b / (a + b))]
}

/// Adds i.i.d. `N(0, σ²)` noise to every coordinate.
pub fn perturb_bases<T: Real>(bases: &BasisSet<T>, sigma: T, seed: u64) -> Result<BasisSet<T>> {
    if !(sigma >= T::zero()) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("noise scale must be finite and >= 0, got {sigma}")));
    }
    let mut out = bases.clone();
    out.provenance = Provenance::Perturbed;
    out.energy_history.clear();
    if sigma == T::zero() {
        return Ok(out);
    }
    let normal = Normal::new(0.0, sigma.as_f64()).expect("valid sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let moved = bases
        .positions()
        .iter()
        .map(|&p| p + Vec3::new(T::lit(normal.sample(&mut rng)), T::lit(normal.sample(&mut rng)), T::lit(normal.sample(&mut rng))))
        .collect();
    let mut moved = BasisSet::new(moved, Provenance::Perturbed)?;
    if let Some(c) = bases.cores() {
        moved = moved.with_cores(c.labels.clone(), c.centers.clone())?;
    }
    Ok(moved)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pts: &[[f64; 3]]) -> BasisSet<f64> {
        BasisSet::new(pts.iter().copied().map(Vec3::from_f64).collect(), Provenance::Optimized).unwrap()
    }

    #[test]
    fn kmeans_separated_clusters() {
        let mut pts = Vec::new();
        for c in [[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [0.0, 10.0, 0.0]] {
            for k in 0..5 {
                let o = 0.1 * k as f64;
                pts.push([c[0] + o, c[1] - o, c[2] + 0.5 * o]);
            }
        }
        let b = kmeans_cores(&set(&pts), 3, 7).unwrap();
        let cores = b.cores().unwrap();
        for g in 0..3 {
            let l = cores.labels[5 * g];
            assert!(cores.labels[5 * g..5 * g + 5].iter().all(|&x| x == l));
            let mean = b.positions()[5 * g..5 * g + 5].iter().copied().sum::<Vec3<f64>>() / 5.0;
            assert!(cores.centers[l].distance(mean) < 1e-12);
        }
    }

    #[test]
    fn kmeans_one_center_per_point() {
        let pts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [5.0, 5.0, 5.0]];
        let (labels, centers) = kmeans(&set(&pts).positions().to_vec(), 4, 3).unwrap();
        let mut l = labels.clone();
        l.sort();
        l.dedup();
        assert_eq!(l.len(), 4);
        for (i, &lab) in labels.iter().enumerate() {
            assert_eq!(centers[lab], Vec3::from_f64(pts[i]));
        }
        assert!(kmeans(&centers, 0, 0).is_err());
        assert!(kmeans(&centers, 5, 0).is_err());
    }

    #[test]
    fn nearest_and_blend() {
        let b = set(&[[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]]);
        assert_eq!(nearest_k_bases(Vec3::zero(), &b, 2).unwrap(), vec![1, 2]);
        assert_eq!(nearest_k_bases(Vec3::zero(), &b, 3).unwrap(), vec![1, 2, 0]);
        assert!(nearest_k_bases(Vec3::zero(), &b, 4).is_err());
        let tie = set(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        assert_eq!(nearest_k_bases(Vec3::zero(), &tie, 1).unwrap(), vec![0]);
        assert_eq!(blend_weights(Vec3::zero(), &tie), vec![(0, 0.5), (1, 0.5)]);
        let w = blend_weights(Vec3::zero(), &set(&[[1.0, 0.0, 0.0], [-3.0, 0.0, 0.0]]));
        assert!((w[0].1 - 0.75).abs() < 1e-15 && (w[1].1 - 0.25).abs() < 1e-15);
        assert_eq!(blend_weights(Vec3::new(1.0, 0.0, 0.0), &tie), vec![(0, 1.0), (1, 0.0)]);
        assert_eq!(blend_weights(Vec3::splat(9.0), &set(&[[0.0; 3]])), vec![(0, 1.0)]);
    }

    #[test]
    fn perturb_identity_and_reproducible() {
        let b = set(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        assert_eq!(perturb_bases(&b, 0.0, 1).unwrap().positions(), b.positions());
        assert_eq!(perturb_bases(&b, 0.3, 9).unwrap(), perturb_bases(&b, 0.3, 9).unwrap());
        assert_ne!(perturb_bases(&b, 0.3, 9).unwrap(), perturb_bases(&b, 0.3, 10).unwrap());
        assert!(perturb_bases(&b, -1.0, 0).is_err());
    }
}
