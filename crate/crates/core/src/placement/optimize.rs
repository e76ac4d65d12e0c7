//! Alternating nearest-basis assignment and gradient steps on the
//! coverage energy.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coverage::CoverageField;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::Real;

use super::energy::{assign_positions, evaluate, AssignMode, Assignment};
use super::{BasisSet, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    /// Adam with a per-basis (isotropic) second moment, so the update
    /// commutes with rotations of the scene.
    #[default]
    Adam,
    /// Normalized gradient step: the basis with the largest gradient moves
    /// by the current learning rate. A step that raises the full-batch
    /// energy is halved until it does not.
    Descent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default, deny_unknown_fields)]
pub struct PlacementConfig<T> {
    pub basis_count: usize,
    /// Denominator guard of the energy.
    pub epsilon: T,
    pub learning_rate: T,
    pub max_iterations: usize,
    pub batch_size: usize,
    /// The rate reaches `learning_rate · lr_decay` at the last iteration.
    pub lr_decay: T,
    pub seed: u64,
    pub optimizer: Optimizer,
    pub assign: AssignMode,
    /// Step halvings tried per iteration by [`Optimizer::Descent`].
    pub max_halvings: u32,
}

impl<T: Real> Default for PlacementConfig<T> {
    fn default() -> Self {
        Self {
            basis_count: 8,
            epsilon: T::lit(1e-4),
            learning_rate: T::lit(0.0016),
            max_iterations: 500,
            batch_size: 8192,
            lr_decay: T::lit(0.01),
            seed: 0,
            optimizer: Optimizer::Adam,
            assign: AssignMode::HalfSpace,
            max_halvings: 30,
        }
    }
}

impl<T: Real> PlacementConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.basis_count == 0 {
            return bad("basis count must be at least 1".into());
        }
        if !(self.epsilon > T::zero()) {
            return bad(format!("epsilon must be > 0, got {}", self.epsilon));
        }
        if !(self.learning_rate > T::zero()) || !self.learning_rate.is_finite() {
            return bad(format!("learning rate must be > 0, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if !(self.lr_decay > T::zero()) || !self.lr_decay.is_finite() {
            return bad(format!("lr decay must be > 0, got {}", self.lr_decay));
        }
        Ok(())
    }

    /// `α₀ · decay^(t / maxiter)`.
    pub fn learning_rate_at(&self, t: usize) -> T {
        if self.max_iterations == 0 {
            return self.learning_rate;
        }
        let frac = T::from_usize_lossy(t) / T::from_usize_lossy(self.max_iterations);
        self.learning_rate * self.lr_decay.powf(frac)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementReport<T> {
    /// Full-batch energy before the first and after every iteration.
    pub energy_history: Vec<T>,
    /// Final assignment; `None` marks infeasible points.
    pub assignment: Assignment,
    /// Total coverage weight assigned to each basis at the end.
    pub basis_mass: Vec<T>,
    /// Points excluded from the final energy.
    pub infeasible_count: usize,
    /// (iteration, basis) pairs where a basis had no batch points and stayed put.
    pub stationary_events: usize,
    /// Descent iterations where every halving still raised the energy.
    pub rejected_steps: usize,
}

impl<T: Real> PlacementReport<T> {
    pub fn iterations(&self) -> usize {
        self.energy_history.len() - 1
    }

    pub fn final_energy(&self) -> T {
        *self.energy_history.last().expect("history has the initial energy")
    }
}

/// Without-replacement mini-batches: a fresh permutation each epoch.
struct Batches {
    rng: ChaCha8Rng,
    order: Vec<usize>,
    cursor: usize,
    size: usize,
}

impl Batches {
    fn new(n: usize, size: usize, seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), order: (0..n).collect(), cursor: n, size }
    }

    fn full(&self) -> bool {
        self.size >= self.order.len()
    }

    fn next(&mut self) -> &[usize] {
        if self.cursor + self.size > self.order.len() {
            self.order.sort_unstable();
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
        }
        let s = self.cursor;
        self.cursor += self.size;
        &self.order[s..s + self.size]
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-12;

/// Runs the placement optimizer from `init`.
pub fn optimize_placement<T: Real>(
    field: &CoverageField<T>,
    init: &BasisSet<T>,
    cfg: &PlacementConfig<T>,
) -> Result<(BasisSet<T>, PlacementReport<T>)> {
    cfg.validate()?;
    if init.len() != cfg.basis_count {
        return Err(Error::InvalidArgument(format!("{} initial bases for a budget of {}", init.len(), cfg.basis_count)));
    }
    let samples = field.samples();
    let w = field.weights();
    let m = init.len();
    let energy = |p: &[Vec3<T>]| {
        let a = assign_positions(samples, p, cfg.assign);
        (evaluate(samples, w, p, &a, cfg.epsilon, None), a)
    };

    let mut pos = init.positions().to_vec();
    let mut current = energy(&pos).0.value;
    let mut history = vec![current];
    let mut batches = Batches::new(samples.len(), cfg.batch_size, cfg.seed);
    let mut stationary = 0;
    let mut rejected = 0;
    let mut m1 = vec![Vec3::zero(); m];
    let mut m2 = vec![T::zero(); m];
    let mut steps = vec![0i32; m];
    let (b1, b2) = (T::lit(ADAM_BETA1), T::lit(ADAM_BETA2));

    for it in 0..cfg.max_iterations {
        let lr = cfg.learning_rate_at(it);
        let batch = if batches.full() { None } else { Some(batches.next()) };
        let assignment = assign_positions(samples, &pos, cfg.assign);
        let eval = evaluate(samples, w, &pos, &assignment, cfg.epsilon, batch);
        stationary += eval.counts.iter().filter(|&&c| c == 0).count();

        match cfg.optimizer {
            Optimizer::Adam => {
                for j in 0..m {
                    if eval.counts[j] == 0 {
                        continue;
                    }
                    let g = eval.grad[j];
                    steps[j] += 1;
                    m1[j] = m1[j] * b1 + g * (T::one() - b1);
                    m2[j] = m2[j] * b2 + g.norm_squared() / T::lit(3.0) * (T::one() - b2);
                    let mh = m1[j] / (T::one() - b1.powi(steps[j]));
                    let vh = m2[j] / (T::one() - b2.powi(steps[j]));
                    pos[j] -= mh * (lr / (vh.sqrt() + T::lit(ADAM_EPS)));
                }
                current = energy(&pos).0.value;
            }
            Optimizer::Descent => {
                let gmax = eval.grad.iter().map(|g| g.norm()).fold(T::zero(), T::max);
                if gmax > T::zero() && gmax.is_finite() {
                    let mut step = lr;
                    let mut accepted = false;
                    for _ in 0..=cfg.max_halvings {
                        let cand: Vec<_> = pos.iter().zip(&eval.grad).map(|(&p, &g)| p - g * (step / gmax)).collect();
                        let e = energy(&cand).0.value;
                        if e <= current {
                            pos = cand;
                            current = e;
                            accepted = true;
                            break;
                        }
                        step = step * T::lit(0.5);
                    }
                    if !accepted {
                        rejected += 1;
                    }
                }
            }
        }
        history.push(current);
    }

    let (eval, assignment) = energy(&pos);
    if stationary > 0 {
        log::info!("{stationary} basis-iterations without assigned points");
    }
    let mut out = BasisSet::new(pos, Provenance::Optimized)?;
    if let Some(c) = init.cores() {
        out = out.with_cores(c.labels.clone(), c.centers.clone())?;
    }
    out.energy_history = history.clone();
    let infeasible_count = eval.excluded;
    Ok((
        out,
        PlacementReport {
            energy_history: history,
            assignment,
            basis_mass: eval.mass,
            infeasible_count,
            stationary_events: stationary,
            rejected_steps: rejected,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh_io::SurfaceSamples;

    fn head_on() -> CoverageField<f64> {
        let s = SurfaceSamples::from_points_normals(vec![Vec3::zero()], vec![Vec3::new(0.0, 0.0, 1.0)]).unwrap();
        CoverageField::from_weights(s, vec![1.0]).unwrap()
    }

    fn start() -> BasisSet<f64> {
        BasisSet::new(vec![Vec3::new(0.0, 0.0, 0.5)], Provenance::FpsInit).unwrap()
    }

    #[test]
    fn zero_iterations_pass_through() {
        let cfg = PlacementConfig { basis_count: 1, max_iterations: 0, ..Default::default() };
        let (b, r) = optimize_placement(&head_on(), &start(), &cfg).unwrap();
        assert_eq!(b.positions(), start().positions());
        assert_eq!(r.energy_history.len(), 1);
        assert!((r.energy_history[0] - 0.125 / (0.5 + 1e-4)).abs() < 1e-15);
    }

    #[test]
    fn head_on_moves_toward_surface() {
        for optimizer in [Optimizer::Adam, Optimizer::Descent] {
            let cfg = PlacementConfig { basis_count: 1, max_iterations: 100, learning_rate: 0.01, optimizer, ..Default::default() };
            let (b, r) = optimize_placement(&head_on(), &start(), &cfg).unwrap();
            let p = b.positions()[0];
            assert!(p.z < 0.5 && p.z > 0.0, "{optimizer:?}: {p:?}");
            assert!(p.x.abs() < 1e-12 && p.y.abs() < 1e-12);
            assert!(r.final_energy() < r.energy_history[0]);
        }
    }

    #[test]
    fn wrong_budget_rejected() {
        let cfg = PlacementConfig { basis_count: 2, ..Default::default() };
        assert!(optimize_placement(&head_on(), &start(), &cfg).is_err());
        let cfg = PlacementConfig { basis_count: 1, epsilon: 0.0, ..Default::default() };
        assert!(optimize_placement(&head_on(), &start(), &cfg).is_err());
    }

    #[test]
    fn batches_cover_every_index_once_per_epoch() {
        let mut b = Batches::new(10, 5, 3);
        let mut seen: Vec<usize> = b.next().to_vec();
        seen.extend_from_slice(b.next());
        seen.sort();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn schedule_endpoints() {
        let cfg: PlacementConfig<f64> = PlacementConfig { max_iterations: 10, ..Default::default() };
        assert_eq!(cfg.learning_rate_at(0), 0.0016);
        assert!((cfg.learning_rate_at(10) - 0.000016).abs() < 1e-18);
    }
}
