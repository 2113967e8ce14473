use std::collections::VecDeque;

use crate::dataset::{Column, Dataset, DiscretizationPolicy, IntervalPolicy, NetworkPolicy};
use crate::error::Result;
use crate::graph::DagStructure;
use crate::scoring::{network_score, PriorSpec, ScoreBreakdown};

use super::dp::optimize_variable_with_limit;
use super::{tie_tolerance, InitSpec, SearchConfig, SearchTrace, Termination, TraceEvent};

/// Starting policies: trivial for discrete variables, the configured
/// initialization (capped at `r_max` intervals) for continuous ones.
pub fn initial_policies(data: &Dataset, init: &InitSpec, r_max: usize) -> Result<NetworkPolicy> {
    if let InitSpec::Given(p) = init {
        p.check_against(data)?;
        return Ok(p.clone());
    }
    let mut out = NetworkPolicy::coarsest(data);
    for i in data.continuous_indices() {
        let Column::Continuous(col) = data.column(i) else {
            unreachable!()
        };
        let cands = col.candidates();
        let (lo, hi) = col.bounds();
        let mut picks: Vec<usize> = match *init {
            InitSpec::EqualFrequency(r0) => {
                let bins = r0.min(r_max).max(1);
                let n = col.values().len();
                let sorted = col.sorted_rows();
                (1..bins)
                    .map(|k| col.ranks()[sorted[k * n / bins - 1]])
                    .filter(|&t| t < cands.len())
                    .collect()
            }
            InitSpec::EqualWidth(r0) => {
                let bins = r0.min(r_max).max(1);
                (1..bins)
                    .filter_map(|k| nearest(cands, lo + (hi - lo) * k as f64 / bins as f64))
                    .collect()
            }
            InitSpec::Given(_) => unreachable!(),
        };
        picks.sort_unstable();
        picks.dedup();
        let thresholds = picks.into_iter().map(|t| cands[t]).collect();
        out.set(i, DiscretizationPolicy::Intervals(IntervalPolicy::new(thresholds, lo, hi)?));
    }
    Ok(out)
}

fn nearest(sorted: &[f64], target: f64) -> Option<usize> {
    if sorted.is_empty() {
        return None;
    }
    let p = sorted.partition_point(|&c| c < target);
    if p == 0 {
        Some(0)
    } else if p == sorted.len() || target - sorted[p - 1] <= sorted[p] - target {
        Some(p - 1)
    } else {
        Some(p)
    }
}

/// Continuous variables whose best policy may change after the policy of `i`
/// changes: every `j != i` not d-separated from `i` by any set of discrete
/// variables (the empty set included).
///
/// `discrete[v]` marks discrete variables. Only used to schedule revisits.
pub fn affected_set(structure: &DagStructure, i: usize, discrete: &[bool]) -> Vec<usize> {
    (0..structure.n())
        .filter(|&j| j != i && !discrete[j])
        .filter(|&j| !structure.separable_within(i, j, discrete))
        .collect()
}

/// Coordinate ascent over every continuous variable.
pub fn coordinate_ascent(
    init: &NetworkPolicy,
    structure: &DagStructure,
    data: &Dataset,
    prior: &PriorSpec,
    config: &SearchConfig,
) -> Result<(NetworkPolicy, SearchTrace)> {
    let all: Vec<usize> = data.continuous_indices();
    coordinate_ascent_over(&all, init, structure, data, prior, config)
}

/// Coordinate ascent restricted to `variables` (continuous ones only are
/// optimized).
///
/// A sweep visits the variables in topological order (index order among
/// ties). Each visit replaces the policy by the exact single-variable
/// optimum when that strictly raises the local score; after an accepted
/// change, variables in the affected set that were already visited in this
/// sweep are queued again. Sweeps stop once one gains less than `epsilon` or
/// after `max_sweeps`.
pub fn coordinate_ascent_over(
    variables: &[usize],
    init: &NetworkPolicy,
    structure: &DagStructure,
    data: &Dataset,
    prior: &PriorSpec,
    config: &SearchConfig,
) -> Result<(NetworkPolicy, SearchTrace)> {
    config.validate()?;
    prior.validate(data.n_rows())?;
    let mut policies = init.clone();
    let mut breakdown = network_score(&policies, structure, data, prior)?;
    let mut trace = SearchTrace::new(breakdown.total);

    let mut selected = vec![false; data.n_vars()];
    for &v in variables {
        if data.is_continuous(v) {
            selected[v] = true;
        }
    }
    let order: Vec<usize> = structure
        .topological_order()
        .iter()
        .copied()
        .filter(|&v| selected[v])
        .collect();
    if order.is_empty() {
        trace.termination = Termination::NothingToOptimize;
        return Ok((policies, trace));
    }
    let discrete: Vec<bool> = (0..data.n_vars()).map(|v| !data.is_continuous(v)).collect();
    let r_max = config.resolved_r_max(data.n_rows());

    for sweep in 1..=config.max_sweeps {
        let start_total = breakdown.total;
        let mut queue: VecDeque<usize> = order.iter().copied().collect();
        let mut queued = selected.clone();
        while let Some(i) = queue.pop_front() {
            queued[i] = false;
            let current = breakdown.local(i, structure);
            let opt = optimize_variable_with_limit(i, &policies, structure, data, prior, r_max)?;
            if !(opt.score > current + tie_tolerance(current)) {
                continue;
            }
            let old_arity = policies.get(i).arity();
            let new_arity = opt.policy.arity();
            let before = breakdown.total;
            let mut next = policies.clone();
            next.set(i, DiscretizationPolicy::Intervals(opt.policy));
            let next_breakdown: ScoreBreakdown = network_score(&next, structure, data, prior)?;
            if !(next_breakdown.total > before) {
                // rounding disagreement between the two score routes
                continue;
            }
            policies = next;
            breakdown = next_breakdown;
            trace.events.push(TraceEvent::Policy {
                sweep,
                variable: i,
                old_arity,
                new_arity,
                delta: breakdown.total - before,
                total: breakdown.total,
            });
            for j in affected_set(structure, i, &discrete) {
                if selected[j] && !queued[j] {
                    queued[j] = true;
                    queue.push_back(j);
                }
            }
        }
        trace.sweep_totals.push(breakdown.total);
        if breakdown.total - start_total < config.epsilon {
            trace.termination = Termination::Converged;
            return Ok((policies, trace));
        }
    }
    trace.termination = Termination::MaxSweeps;
    Ok((policies, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnData, VariableMeta};

    fn mixed() -> Dataset {
        let xs: Vec<f64> = (0..20).map(|k| (k as f64 * 0.37).sin() * 5.0).collect();
        let ds: Vec<usize> = xs.iter().map(|&x| usize::from(x > 0.0)).collect();
        let zs: Vec<f64> = xs.iter().map(|&x| if x > 0.0 { 2.0 + x } else { -2.0 + x }).collect();
        Dataset::from_columns(
            vec![
                VariableMeta::continuous("x", 0),
                VariableMeta::discrete("d", 1, 2),
                VariableMeta::continuous("z", 2),
            ],
            vec![ColumnData::Continuous(xs), ColumnData::Discrete(ds), ColumnData::Continuous(zs)],
        )
        .unwrap()
    }

    #[test]
    fn affected_set_examples() {
        // all continuous chain
        let g = DagStructure::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(affected_set(&g, 0, &[false; 3]), vec![1, 2]);
        // discrete middle blocks
        assert_eq!(affected_set(&g, 0, &[false, true, false]), Vec::<usize>::new());
        // isolated
        let e = DagStructure::empty(3);
        assert!(affected_set(&e, 1, &[false; 3]).is_empty());
    }

    #[test]
    fn equal_frequency_init() {
        let d = Dataset::from_columns(
            vec![VariableMeta::continuous("x", 0)],
            vec![ColumnData::Continuous((0..9).map(f64::from).collect())],
        )
        .unwrap();
        let p = initial_policies(&d, &InitSpec::EqualFrequency(3), 12).unwrap();
        assert_eq!(p.get(0).intervals().unwrap().thresholds(), &[2.5, 5.5]);
        let p = initial_policies(&d, &InitSpec::EqualWidth(4), 12).unwrap();
        assert_eq!(p.get(0).intervals().unwrap().thresholds(), &[1.5, 3.5, 5.5]);
        let p = initial_policies(&d, &InitSpec::EqualFrequency(3), 1).unwrap();
        assert!(p.get(0).intervals().unwrap().thresholds().is_empty());
    }

    #[test]
    fn fixed_point_takes_one_sweep() {
        let d = mixed();
        let g = DagStructure::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let config = SearchConfig::default();
        let init = initial_policies(&d, &config.init, 12).unwrap();
        let (first, t1) = coordinate_ascent(&init, &g, &d, &PriorSpec::default(), &config).unwrap();
        assert!(t1.is_monotone());
        let (second, t2) = coordinate_ascent(&first, &g, &d, &PriorSpec::default(), &config).unwrap();
        assert_eq!(first, second);
        assert_eq!(t2.sweeps(), 1);
        assert!(t2.events.is_empty());
    }

    #[test]
    fn all_discrete_is_untouched() {
        let d = Dataset::from_columns(
            vec![VariableMeta::discrete("a", 0, 2), VariableMeta::discrete("b", 1, 3)],
            vec![ColumnData::Discrete(vec![0, 1, 1]), ColumnData::Discrete(vec![2, 0, 1])],
        )
        .unwrap();
        let init = NetworkPolicy::coarsest(&d);
        let g = DagStructure::from_edges(2, &[(0, 1)]).unwrap();
        let (out, trace) =
            coordinate_ascent(&init, &g, &d, &PriorSpec::default(), &SearchConfig::default()).unwrap();
        assert_eq!(out, init);
        assert_eq!(trace.termination, Termination::NothingToOptimize);
    }
}
