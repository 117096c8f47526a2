//! Experiment configuration and Monte Carlo sweeps.

pub mod config;
pub mod sweep;

pub use config::{ExperimentConfig, MinSpacing, Scheme};
pub use sweep::{
    metadata_path, realization_users, run_bound_sweep, run_segment_sweep, run_single, run_sweep,
    run_user_sweep, write_metadata, write_sweep, ResampleCount, SingleRun, SweepAxis, SweepOutcome,
    SweepRow,
};
