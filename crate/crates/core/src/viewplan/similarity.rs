use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh_io::{Camera, Trajectory};
use crate::raycast::{visible, Bvh, Occlusion, DEFAULT_EPS_OCC_FRACTION};
use crate::scalar::Real;

use super::FeatureCloud;

/// Symmetric co-visibility counts between views, stored as a packed upper
/// triangle. Views are indexed training cameras first, then candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityMatrix {
    n: usize,
    ids: Vec<i64>,
    counts: Vec<u32>,
    max_off_diagonal: u32,
}

impl SimilarityMatrix {
    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        a * self.n - a * (a + 1) / 2 + b
    }

    pub fn zeros(ids: Vec<i64>) -> Self {
        let n = ids.len();
        Self { n, ids, counts: vec![0; n * (n + 1) / 2], max_off_diagonal: 0 }
    }

    /// Builds a matrix from `f(i, j)` evaluated for `i ≤ j`.
    pub fn from_fn(ids: Vec<i64>, f: impl Fn(usize, usize) -> u32) -> Self {
        let mut m = Self::zeros(ids);
        for i in 0..m.n {
            for j in i..m.n {
                let s = m.slot(i, j);
                m.counts[s] = f(i, j);
            }
        }
        m.refresh_max();
        m
    }

    fn refresh_max(&mut self) {
        let mut max = 0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                max = max.max(self.counts[self.slot(i, j)]);
            }
        }
        self.max_off_diagonal = max;
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn ids(&self) -> &[i64] {
        &self.ids
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.counts[self.slot(i, j)]
    }

    /// Largest count between two distinct views.
    pub fn max(&self) -> u32 {
        self.max_off_diagonal
    }
}

/// Counts, for every pair of views, the features both see.
///
/// Visibility is frustum plus shadow-ray occlusion without a backface test.
/// When the cloud has observer lists they decide visibility for training
/// cameras; candidates always use geometry.
pub fn build_similarity<T: Real>(
    training: &Trajectory<T>,
    candidates: &[Camera<T>],
    features: &FeatureCloud<T>,
    bvh: &Bvh<T>,
    eps_occ: Option<T>,
) -> Result<SimilarityMatrix> {
    if features.is_empty() {
        return Err(Error::InvalidArgument("similarity needs at least one feature".into()));
    }
    features.check_observers(training)?;
    let eps = eps_occ.unwrap_or_else(|| T::lit(DEFAULT_EPS_OCC_FRACTION) * bvh.bbox().diagonal());
    let views: Vec<&Camera<T>> = training.cameras().iter().chain(candidates).collect();
    let n_train = training.len();
    let index_of: std::collections::HashMap<i64, usize> = training.cameras().iter().enumerate().map(|(i, c)| (c.id, i)).collect();

    let sees = |cam: &Camera<T>, f: Vec3<T>| visible(bvh, cam, f, None, Occlusion::ShadowRay, eps);
    let sets: Vec<Vec<usize>> = (0..features.len())
        .into_par_iter()
        .map(|k| {
            let f = features.points()[k];
            let mut set: Vec<usize> = match features.observers() {
                Some(obs) => {
                    let mut s: Vec<usize> = obs[k].iter().map(|id| index_of[id]).collect();
                    s.extend((n_train..views.len()).filter(|&v| sees(views[v], f)));
                    s
                }
                None => (0..views.len()).filter(|&v| sees(views[v], f)).collect(),
            };
            set.sort_unstable();
            set.dedup();
            set
        })
        .collect();

    let mut m = SimilarityMatrix::zeros(views.iter().map(|c| c.id).collect());
    for set in &sets {
        for (a, &i) in set.iter().enumerate() {
            let row = i * m.n - i * (i + 1) / 2;
            for &j in &set[a..] {
                m.counts[row + j] += 1;
            }
        }
    }
    m.refresh_max();
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_indexing_is_symmetric() {
        let m = SimilarityMatrix::from_fn((0..5).collect(), |i, j| (10 * i + j) as u32);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(m.get(i, j), m.get(j, i));
                assert_eq!(m.get(i, j) as usize, 10 * i.min(j) + i.max(j));
            }
        }
        assert_eq!(m.max(), 34);
    }
}
