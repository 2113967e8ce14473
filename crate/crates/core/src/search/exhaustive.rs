use std::cmp::Ordering;

use crate::dataset::{Dataset, DiscretizationPolicy, IntervalPolicy, NetworkPolicy};
use crate::error::{Error, Result};
use crate::graph::DagStructure;
use crate::scoring::{local_score, PriorSpec};

use super::tie_tolerance;

/// Candidate counts above this are refused: the policy space has `2^M`
/// members.
pub const MAX_EXHAUSTIVE_CANDIDATES: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct ExhaustiveResult {
    pub policy: IntervalPolicy,
    pub score: f64,
    /// Number of policies scored.
    pub evaluations: usize,
}

/// Scores every subset of the candidate thresholds of `i` with at most
/// `r_max` intervals through the full local score and returns the best.
///
/// Ties within [`tie_tolerance`] prefer fewer intervals, then the
/// lexicographically smaller threshold sequence.
pub fn exhaustive_policy_search(
    i: usize,
    policies: &NetworkPolicy,
    structure: &DagStructure,
    data: &Dataset,
    prior: &PriorSpec,
    r_max: usize,
) -> Result<ExhaustiveResult> {
    let col = data.continuous(i).ok_or_else(|| {
        Error::Policy(format!("variable `{}` is not continuous", data.variable(i).name))
    })?;
    let candidates = col.candidates();
    let m = candidates.len();
    if m > MAX_EXHAUSTIVE_CANDIDATES {
        return Err(Error::Refused(format!(
            "{m} candidate thresholds exceed the exhaustive limit of {MAX_EXHAUSTIVE_CANDIDATES}"
        )));
    }
    let (lower, upper) = match policies.get(i) {
        DiscretizationPolicy::Intervals(p) => p.bounds(),
        DiscretizationPolicy::Trivial { .. } => col.bounds(),
    };

    let mut trial = policies.clone();
    let mut scored: Vec<(IntervalPolicy, f64)> = Vec::new();
    for mask in 0u32..(1u32 << m) {
        if mask.count_ones() as usize + 1 > r_max.max(1) {
            continue;
        }
        let thresholds: Vec<f64> = (0..m)
            .filter(|&t| mask & (1 << t) != 0)
            .map(|t| candidates[t])
            .collect();
        let policy = IntervalPolicy::new(thresholds, lower, upper)?;
        trial.set(i, DiscretizationPolicy::Intervals(policy.clone()));
        let score = local_score(i, &trial, structure, data, prior)?;
        scored.push((policy, score));
    }

    let evaluations = scored.len();
    let best = scored.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
    let floor = best - tie_tolerance(best);
    let (policy, score) = scored
        .into_iter()
        .filter(|(_, s)| *s >= floor)
        .min_by(|(a, _), (b, _)| parsimony_order(a, b))
        .expect("at least the single-interval policy is scored");
    Ok(ExhaustiveResult {
        policy,
        score,
        evaluations,
    })
}

fn parsimony_order(a: &IntervalPolicy, b: &IntervalPolicy) -> Ordering {
    a.arity().cmp(&b.arity()).then_with(|| {
        a.thresholds()
            .iter()
            .zip(b.thresholds())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}
