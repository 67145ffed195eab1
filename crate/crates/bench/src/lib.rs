//! Shared fixtures for the solver benchmarks.

use bhdimer_core::state::dimer_space;
use bhdimer_core::{FockSpace, ModelParams, TrajectoryConfig};

/// Hopping-sweep point at `J + Δ = 2`, `U = 1`, `F = 1.07`.
pub fn sweep_point(j: f64) -> ModelParams {
    ModelParams::with_fixed_sum(j, 2.0, 1.0, 1.07)
}

pub fn space(n_max: usize) -> FockSpace {
    dimer_space(n_max).expect("valid cutoff")
}

/// A short run: a handful of trajectories without burn-in, for timing the stepper.
pub fn short_run(n_traj: usize, t_total: f64) -> TrajectoryConfig {
    TrajectoryConfig { n_traj, batches: n_traj, t_burn: 0.0, t_total, ..TrajectoryConfig::default() }
}
