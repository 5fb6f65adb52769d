//! Desk-scale Monte Carlo surrogates for the separation, normalizing-constant,
//! ordering, fluctuation and bridge-jump bounds.
//!
//! Each experiment returns an [`ExperimentReport`]: labelled estimates,
//! fitted constants and pass/fail checks. Constants that only exist in the
//! analysis are fitted from the run and reported, never assumed.

mod bbjump;
mod fluctuation;
mod importance;
mod ordering;
mod report;
mod separation;

pub use bbjump::{run_bbjump_check, BbJumpConfig};
pub use fluctuation::{run_fluctuation_experiment, FluctuationConfig};
pub use importance::{shift_log_ratio, weighted_fraction};
pub use ordering::{run_ordering_experiment, OrderingConfig};
pub use report::{Check, ExperimentReport};
pub use separation::{run_separation_experiment, run_z_lowerbound_experiment, SeparationConfig};

/// ESS below which importance-sampled estimates are rejected.
pub const MIN_ESS: f64 = 100.0;

/// Largest grid any experiment will build.
pub const MAX_GRID_POINTS: usize = 1 << 13;

/// Largest per-estimate sample count.
pub const MAX_SAMPLES: usize = 1_000_000;
