//! Basis placement: initialization, baselines, the coverage-energy
//! optimizer, core clustering and basis queries.

mod basis;
mod cluster;
mod energy;
mod init;
mod optimize;

pub use basis::{BasisSet, BasisSetRecord, Cores, Provenance};
pub use cluster::{blend_weights, kmeans, kmeans_cores, nearest_k_bases, perturb_bases, KMEANS_MAX_ITERATIONS, KMEANS_SHIFT_TOL};
pub use energy::{
    assign_nearest, assign_positions, coverage_loss, coverage_loss_grad, energy_term, evaluate, full_energy, AssignMode, Assignment,
    EnergyEval,
};
pub use init::{baseline_grid, baseline_trajectory, fps_init, grid_dims_for};
pub use optimize::{optimize_placement, Optimizer, PlacementConfig, PlacementReport};
