//! Uplink model for segmented waveguide-enabled pinching-antenna systems (SWAN).
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] holds physical parameters, the segment layout, user drops and
//!   antenna placements.
//! * [`channel`] evaluates free-space, in-waveguide and aggregated channels and
//!   the uplink sum-rate.
//! * [`bound`] implements the analytical sum-rate upper bound and its
//!   closed-form integral approximation.
//! * [`optimize`] contains the greedy segment-activation searches (with and
//!   without per-segment phase shifters), the unit-modulus phase solver and
//!   the full-aggregation baseline.
//! * [`harness`] runs seeded Monte Carlo sweeps and writes CSV results.

pub mod bound;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod optimize;

pub use error::{Error, Result};
pub use geometry::{
    build_centered_layout, dbm_to_watts, sample_users, watts_to_dbm, ActiveSegment, Placement,
    SystemParams, User, UserSet, WaveguideLayout, SPEED_OF_LIGHT,
};
pub use harness::{ExperimentConfig, Scheme};
pub use num_complex::Complex64;

/// Complex amplitude ratio used for every channel coefficient.
pub type ComplexGain = Complex64;
