//! Numerical tolerances shared across the crate.

use serde::{Deserialize, Serialize};

/// Tolerances for validation and comparisons. All arithmetic is `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Probability vectors and joint pmfs must sum to one within this.
    pub validation: f64,
    /// Estimator columns and coupling marginals must match within this.
    pub stochastic: f64,
    /// General equality comparisons (metric axioms, envelope ties).
    pub equality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            validation: 1e-12,
            stochastic: 1e-10,
            equality: 1e-9,
        }
    }
}

/// Pivots below this magnitude are treated as zero in dense solves.
pub const PIVOT_EPS: f64 = 1e-11;

/// Points of a vertex list closer than this are merged.
pub const VERTEX_DEDUP: f64 = 1e-7;

/// `u_y` values closer than this are treated as one cost level.
pub const COST_TIE: f64 = 1e-12;
