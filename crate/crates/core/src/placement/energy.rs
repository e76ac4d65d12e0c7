//! Coverage energy: each surface point pays `w·‖d‖³ / (n̂·d + ε)` toward its
//! nearest basis in front of it, with `d = p − x`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::mesh_io::SurfaceSamples;
use crate::scalar::Real;

use super::BasisSet;

/// Samples per parallel work unit. Partial sums are combined in chunk
/// order, so results do not depend on the thread count.
pub(crate) const CHUNK: usize = 2048;

/// Which bases a surface point may be assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssignMode {
    /// Only bases strictly in front of the point: `n̂·(p − x) > 0`.
    #[default]
    HalfSpace,
    /// Plain nearest basis. Points whose assigned basis gives a
    /// non-positive denominator are dropped from the energy.
    Unconstrained,
}

/// Nearest-basis index per sample; `None` marks an infeasible point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub basis: Vec<Option<u32>>,
}

impl Assignment {
    pub fn infeasible_count(&self) -> usize {
        self.basis.iter().filter(|b| b.is_none()).count()
    }
}

#[inline]
pub(crate) fn nearest_for<T: Real>(x: Vec3<T>, n: Vec3<T>, bases: &[Vec3<T>], mode: AssignMode) -> Option<u32> {
    let mut best: Option<(T, u32)> = None;
    for (j, &p) in bases.iter().enumerate() {
        let d = p - x;
        if mode == AssignMode::HalfSpace && !(n.dot(d) > T::zero()) {
            continue;
        }
        let r2 = d.norm_squared();
        if best.map_or(true, |(b, _)| r2 < b) {
            best = Some((r2, j as u32));
        }
    }
    best.map(|(_, j)| j)
}

/// Assigns every sample to its nearest admissible basis, ties to the lower id.
pub fn assign_nearest<T: Real>(samples: &SurfaceSamples<T>, bases: &BasisSet<T>) -> Assignment {
    assign_positions(samples, bases.positions(), AssignMode::HalfSpace)
}

pub fn assign_positions<T: Real>(samples: &SurfaceSamples<T>, bases: &[Vec3<T>], mode: AssignMode) -> Assignment {
    let basis = samples
        .points()
        .par_iter()
        .zip(samples.normals().par_iter())
        .map(|(&x, &n)| nearest_for(x, n, bases, mode))
        .collect();
    Assignment { basis }
}

/// Value and gradient (w.r.t. `p`) of one energy term, or `None` when the
/// denominator is not positive.
#[inline]
pub fn energy_term<T: Real>(w: T, x: Vec3<T>, n: Vec3<T>, p: Vec3<T>, eps: T) -> Option<(T, Vec3<T>)> {
    let d = p - x;
    let s = n.dot(d) + eps;
    if !(s > T::zero()) {
        return None;
    }
    let r = d.norm();
    let r3 = r * r * r;
    let value = w * r3 / s;
    let grad = (d * (T::lit(3.0) * r / s) - n * (r3 / (s * s))) * w;
    Some((value, grad))
}

/// Energy, per-basis gradient, per-basis assigned count and weight mass,
/// and the number of points that contributed nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyEval<T> {
    pub value: T,
    pub grad: Vec<Vec3<T>>,
    pub counts: Vec<usize>,
    pub mass: Vec<T>,
    pub excluded: usize,
}

impl<T: Real> EnergyEval<T> {
    fn zero(m: usize) -> Self {
        Self { value: T::zero(), grad: vec![Vec3::zero(); m], counts: vec![0; m], mass: vec![T::zero(); m], excluded: 0 }
    }

    fn absorb(&mut self, o: &Self) {
        self.value = self.value + o.value;
        for j in 0..self.grad.len() {
            self.grad[j] += o.grad[j];
            self.counts[j] += o.counts[j];
            self.mass[j] = self.mass[j] + o.mass[j];
        }
        self.excluded += o.excluded;
    }
}

/// Evaluates the energy over `indices` (all samples when `None`) with the
/// assignment held fixed.
pub fn evaluate<T: Real>(
    samples: &SurfaceSamples<T>,
    weights: &[T],
    bases: &[Vec3<T>],
    assignment: &Assignment,
    eps: T,
    indices: Option<&[usize]>,
) -> EnergyEval<T> {
    let m = bases.len();
    let pts = samples.points();
    let nrm = samples.normals();
    let run = |it: &mut dyn Iterator<Item = usize>| {
        let mut acc = EnergyEval::zero(m);
        for i in it {
            let Some(j) = assignment.basis[i] else {
                acc.excluded += 1;
                continue;
            };
            let j = j as usize;
            match energy_term(weights[i], pts[i], nrm[i], bases[j], eps) {
                Some((v, g)) => {
                    acc.value = acc.value + v;
                    acc.grad[j] += g;
                    acc.counts[j] += 1;
                    acc.mass[j] = acc.mass[j] + weights[i];
                }
                None => acc.excluded += 1,
            }
        }
        acc
    };
    let partials: Vec<EnergyEval<T>> = match indices {
        Some(idx) => idx.par_chunks(CHUNK).map(|c| run(&mut c.iter().copied())).collect(),
        None => {
            let n = samples.len();
            let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
            starts.par_iter().map(|&s| run(&mut (s..(s + CHUNK).min(n)))).collect()
        }
    };
    let mut total = EnergyEval::zero(m);
    for p in &partials {
        total.absorb(p);
    }
    total
}

/// `Σ w_i ‖p_C(i) − x_i‖³ / (n̂_i·(p_C(i) − x_i) + ε)` over feasible points.
pub fn coverage_loss<T: Real>(samples: &SurfaceSamples<T>, weights: &[T], bases: &[Vec3<T>], assignment: &Assignment, eps: T) -> T {
    evaluate(samples, weights, bases, assignment, eps, None).value
}

/// Analytic gradient of [`coverage_loss`] with respect to each basis.
pub fn coverage_loss_grad<T: Real>(
    samples: &SurfaceSamples<T>,
    weights: &[T],
    bases: &[Vec3<T>],
    assignment: &Assignment,
    eps: T,
) -> Vec<Vec3<T>> {
    evaluate(samples, weights, bases, assignment, eps, None).grad
}

/// Energy with a fresh assignment at `bases`.
pub fn full_energy<T: Real>(samples: &SurfaceSamples<T>, weights: &[T], bases: &[Vec3<T>], eps: T, mode: AssignMode) -> T {
    let a = assign_positions(samples, bases, mode);
    coverage_loss(samples, weights, bases, &a, eps)
}
