//! Joint segment activation, antenna placement and phase design.

mod full_sa;
mod greedy;
mod grid;
mod phase;

pub use full_sa::{full_sa_baseline, Aggregation, FullSaOutcome};
pub use greedy::{
    greedy_hssa_type1, greedy_hssa_type2, place_in_segment, GreedyTrace, TraceLevel, TrialPlacement,
};
pub use grid::{candidate_grid, infeasible_points, PhaseMode};
pub use phase::{
    build_phase_matrix, phase_alternating_opt, phase_alternating_opt_observed, PhaseMatrix,
    PhaseSolution,
};

pub(crate) use full_sa::full_sa;
pub(crate) use greedy::{greedy, Problem};

use serde::{Deserialize, Serialize};

/// Grid resolution and phase-solver stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    /// Grid points per segment (Q).
    pub grid_points: usize,
    /// Relative objective gain below which iterative refinements stop.
    pub tolerance: f64,
    /// Maximum sweeps of the phase solver and of the full-aggregation refinement.
    pub max_iter: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            grid_points: 1000,
            tolerance: 1e-8,
            max_iter: 100,
        }
    }
}
