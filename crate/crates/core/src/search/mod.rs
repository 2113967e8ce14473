//! Optimization drivers.
//!
//! * [`optimize_variable`]: exact best policy for one continuous variable
//!   with every other policy held fixed (dynamic programming over interval
//!   partitions of the candidate-threshold grid).
//! * [`exhaustive_policy_search`]: the same optimum by enumerating every
//!   threshold subset; a test oracle for small grids.
//! * [`coordinate_ascent`]: sweeps of per-variable optimization until a sweep
//!   gains less than `epsilon`.
//! * [`hill_climb_structure`]: greedy edge additions, deletions and reversals
//!   from the empty graph, re-discretizing after accepted edits.

mod ascent;
mod dp;
mod exhaustive;
mod structure;
mod trace;

pub use ascent::{affected_set, coordinate_ascent, coordinate_ascent_over, initial_policies};
pub use dp::{optimize_variable, optimize_variable_with_limit, VariableOptimum};
pub use exhaustive::{exhaustive_policy_search, ExhaustiveResult, MAX_EXHAUSTIVE_CANDIDATES};
pub use structure::{hill_climb_structure, LearnedNetwork};
pub use trace::{EdgeOp, SearchTrace, Termination, TraceEvent};

use crate::dataset::NetworkPolicy;
use crate::error::{Error, Result};

/// Absolute floor of the tolerance under which two scores count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Tie tolerance around a score of magnitude `best`.
pub fn tie_tolerance(best: f64) -> f64 {
    if best.is_finite() {
        TIE_TOLERANCE.max(1e-12 * best.abs())
    } else {
        TIE_TOLERANCE
    }
}

/// Starting discretization for continuous variables.
#[derive(Clone, Debug, PartialEq)]
pub enum InitSpec {
    /// `r0` bins with roughly equal counts, snapped to candidate thresholds.
    EqualFrequency(usize),
    /// `r0` equal-width bins, snapped to the nearest candidate thresholds.
    EqualWidth(usize),
    Given(NetworkPolicy),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    /// Maximum interval count; `None` resolves to `min(12, N - 1)`.
    pub r_max: Option<usize>,
    pub epsilon: f64,
    pub max_sweeps: usize,
    pub init: InitSpec,
    pub structure_search: bool,
    pub max_parents: usize,
    /// Re-discretize after every `interleave_period` accepted edits.
    pub interleave_period: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            r_max: None,
            epsilon: 1e-6,
            max_sweeps: 50,
            init: InitSpec::EqualFrequency(3),
            structure_search: true,
            max_parents: 3,
            interleave_period: 1,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn resolved_r_max(&self, n_rows: usize) -> usize {
        self.r_max
            .unwrap_or_else(|| 12.min(n_rows.saturating_sub(1)))
            .max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r_max == Some(0) {
            return Err(Error::Validation("r_max must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Validation(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Validation("max_sweeps must be at least 1".into()));
        }
        if self.interleave_period == 0 {
            return Err(Error::Validation("interleave period must be at least 1".into()));
        }
        match self.init {
            InitSpec::EqualFrequency(0) | InitSpec::EqualWidth(0) => {
                Err(Error::Validation("initial bin count must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }
}
