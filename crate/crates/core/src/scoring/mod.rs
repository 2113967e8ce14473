//! Score mathematics for discretized Bayesian networks.
//!
//! A network score is a sum over nodes of three parts:
//!
//! * the continuous component, the log density of the raw values given their
//!   interval codes (uniform within each interval, or a Dirichlet-multinomial
//!   over the distinct values of each interval);
//! * the discrete component, the Dirichlet-multinomial log marginal
//!   likelihood of the node's discretized family;
//! * the log prior of the node's policy.
//!
//! All arithmetic is in natural-log space. The uniform density omits the
//! differential element `dx`, so absolute values of the continuous component
//! are log densities; the omitted constant is the same for every policy on a
//! given column and does not move the argmax.

mod counts;
mod gamma;
mod prior;

pub use counts::{config_index, discrete_family_score, family_counts, FamilyCounts};
pub use gamma::log_gamma;
pub use prior::policy_log_prior;

pub(crate) use gamma::ln_gamma_unchecked;

use crate::dataset::{ContinuousColumn, Dataset, DiscreteData, DiscretizationPolicy, IntervalPolicy, NetworkPolicy};
use crate::error::{Error, Result};
use crate::graph::DagStructure;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DirichletMode {
    /// Constant hyperparameter `alpha` in every cell.
    K2 { alpha: f64 },
    /// Equivalent sample size `ess`, spread as `ess / (r q)` per cell.
    BDeu { ess: f64 },
}

impl DirichletMode {
    /// Per-cell hyperparameter for a family with child arity `r` and `q`
    /// parent configurations.
    pub fn cell(&self, r: usize, q: usize) -> f64 {
        match *self {
            DirichletMode::K2 { alpha } => alpha,
            DirichletMode::BDeu { ess } => ess / (r * q) as f64,
        }
    }

    /// Whether cell hyperparameters depend on arities.
    pub fn depends_on_arity(&self) -> bool {
        matches!(self, DirichletMode::BDeu { .. })
    }
}

impl Default for DirichletMode {
    fn default() -> Self {
        DirichletMode::K2 { alpha: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum PolicyPrior {
    #[default]
    Uniform,
    /// Truncated Poisson over the interval count with uniform thresholds
    /// given the count.
    PoissonOverR { lambda: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DensityModel {
    #[default]
    UniformWithinInterval,
    /// Dirichlet-multinomial over the distinct values inside each interval.
    MultinomialAbstraction,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PriorSpec {
    pub dirichlet: DirichletMode,
    pub policy_prior: PolicyPrior,
    pub density: DensityModel,
}

impl PriorSpec {
    /// Checks hyperparameters; the Poisson rate must satisfy
    /// `2 <= lambda <= n_rows - 1`.
    pub fn validate(&self, n_rows: usize) -> Result<()> {
        match self.dirichlet {
            DirichletMode::K2 { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                return Err(Error::Prior(format!("K2 alpha must be positive, got {alpha}")))
            }
            DirichletMode::BDeu { ess } if !(ess > 0.0 && ess.is_finite()) => {
                return Err(Error::Prior(format!("BDeu ess must be positive, got {ess}")))
            }
            _ => {}
        }
        if let PolicyPrior::PoissonOverR { lambda } = self.policy_prior {
            let top = n_rows as f64 - 1.0;
            if !(lambda >= 2.0 && lambda <= top) {
                return Err(Error::Prior(format!(
                    "Poisson rate {lambda} must lie in [2, {top}] for {n_rows} cases"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeScore {
    pub continuous: f64,
    pub discrete: f64,
    pub log_prior: f64,
}

impl NodeScore {
    pub fn sum(&self) -> f64 {
        self.continuous + self.discrete + self.log_prior
    }
}

/// Per-node score parts; `total` is their plain sum in node order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreBreakdown {
    pub nodes: Vec<NodeScore>,
    pub total: f64,
}

impl ScoreBreakdown {
    pub fn from_nodes(nodes: Vec<NodeScore>) -> Self {
        let total = nodes.iter().map(NodeScore::sum).sum();
        ScoreBreakdown { nodes, total }
    }

    /// The local score of `i`: its own parts plus the discrete components of
    /// its children.
    pub fn local(&self, i: usize, structure: &DagStructure) -> f64 {
        self.nodes[i].sum()
            + structure
                .children(i)
                .iter()
                .map(|&c| self.nodes[c].discrete)
                .sum::<f64>()
    }
}

/// Continuous component of a column under `policy`.
pub fn continuous_component(
    column: &ContinuousColumn,
    policy: &IntervalPolicy,
    prior: &PriorSpec,
) -> Result<f64> {
    match prior.density {
        DensityModel::UniformWithinInterval => uniform_component(column, policy),
        DensityModel::MultinomialAbstraction => {
            let grouping: Vec<usize> = column
                .distinct_values()
                .iter()
                .map(|&v| policy.code_of(v))
                .collect();
            check_in_bounds(column, policy)?;
            within_group_score(column.distinct_counts(), &grouping, policy.arity(), &prior.dirichlet, true)
        }
    }
}

fn check_in_bounds(column: &ContinuousColumn, policy: &IntervalPolicy) -> Result<()> {
    let (lo, hi) = policy.bounds();
    for x in [column.min(), column.max()] {
        if x < lo || x > hi {
            return Err(Error::OutOfRange {
                column: String::new(),
                value: x,
                lower: lo,
                upper: hi,
            });
        }
    }
    Ok(())
}

fn uniform_component(column: &ContinuousColumn, policy: &IntervalPolicy) -> Result<f64> {
    check_in_bounds(column, policy)?;
    let (lo, hi) = policy.bounds();
    if lo == hi {
        // constant column: point mass, density 1 w.r.t. counting measure
        return Ok(0.0);
    }
    let mut counts = vec![0usize; policy.arity()];
    for (&v, &n) in column.distinct_values().iter().zip(column.distinct_counts()) {
        counts[policy.code_of(v)] += n;
    }
    let mut total = 0.0;
    for (k, &n) in counts.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let (left, right) = policy.interval(k);
        let width = right - left;
        if !(width > 0.0) {
            return Err(Error::Policy(format!("interval {k} has zero width")));
        }
        total -= n as f64 * width.ln();
    }
    Ok(total)
}

/// Score of an abstraction: the Dirichlet-multinomial log marginal likelihood
/// of the original values within each group.
///
/// `codes` holds original values in `0..grouping.len()`; `grouping[v]` is the
/// group of value `v`. Every group in `0..n_groups` must be non-empty.
pub fn abstraction_component(
    codes: &[usize],
    grouping: &[usize],
    n_groups: usize,
    prior: &PriorSpec,
) -> Result<f64> {
    let mut value_counts = vec![0usize; grouping.len()];
    for &c in codes {
        if c >= grouping.len() {
            return Err(Error::Validation(format!(
                "value {c} has no group (grouping covers {} values)",
                grouping.len()
            )));
        }
        value_counts[c] += 1;
    }
    within_group_score(&value_counts, grouping, n_groups, &prior.dirichlet, false)
}

/// Σ_groups [lnΓ(α_g) − lnΓ(α_g + N_g) + Σ_{v ∈ g} (lnΓ(α_v + n_v) − lnΓ(α_v))].
///
/// Under K2 every value cell gets `alpha`; under BDeu a group with `m`
/// members gets `ess / m` per cell. With `allow_empty`, groups with no member
/// values are skipped (empty intervals of a continuous column).
fn within_group_score(
    value_counts: &[usize],
    grouping: &[usize],
    n_groups: usize,
    dirichlet: &DirichletMode,
    allow_empty: bool,
) -> Result<f64> {
    let mut members = vec![0usize; n_groups];
    let mut group_n = vec![0usize; n_groups];
    for (v, &g) in grouping.iter().enumerate() {
        if g >= n_groups {
            return Err(Error::Validation(format!("group {g} outside 0..{n_groups}")));
        }
        members[g] += 1;
        group_n[g] += value_counts[v];
    }
    if !allow_empty {
        if let Some(g) = members.iter().position(|&m| m == 0) {
            return Err(Error::Validation(format!("group {g} has no member values")));
        }
    }
    let mut total = 0.0;
    for g in 0..n_groups {
        if members[g] == 0 || group_n[g] == 0 {
            continue;
        }
        let cell = dirichlet.cell(members[g], 1);
        let row = cell * members[g] as f64;
        total += ln_gamma_unchecked(row) - ln_gamma_unchecked(row + group_n[g] as f64);
    }
    for (v, &g) in grouping.iter().enumerate() {
        let n = value_counts[v];
        if n > 0 {
            let cell = dirichlet.cell(members[g], 1);
            total += ln_gamma_unchecked(cell + n as f64) - ln_gamma_unchecked(cell);
        }
    }
    Ok(total)
}

/// Single-variable score: discrete component with no parents, plus the
/// continuous component, plus the policy log prior.
pub fn univariate_score(column: &ContinuousColumn, policy: &IntervalPolicy, prior: &PriorSpec) -> Result<f64> {
    let codes = crate::dataset::apply_policy(column.values(), policy)?;
    let data = DiscreteData::new(vec![codes], vec![policy.arity()]);
    let sd = discrete_family_score(&family_counts(&data, 0, &[]), &prior.dirichlet);
    let sc = continuous_component(column, policy, prior)?;
    let lp = policy_log_prior(
        policy.arity(),
        column.candidates().len(),
        column.values().len(),
        &prior.policy_prior,
    )?;
    Ok(sd + sc + lp)
}

fn node_parts(
    i: usize,
    policies: &NetworkPolicy,
    data: &Dataset,
    prior: &PriorSpec,
) -> Result<(f64, f64)> {
    match (policies.get(i), data.continuous(i)) {
        (DiscretizationPolicy::Intervals(p), Some(col)) => {
            let sc = continuous_component(col, p, prior).map_err(|e| name_error(e, data, i))?;
            let lp = policy_log_prior(p.arity(), col.candidates().len(), data.n_rows(), &prior.policy_prior)
                .map_err(|e| name_error(e, data, i))?;
            Ok((sc, lp))
        }
        (DiscretizationPolicy::Trivial { .. }, None) => Ok((0.0, 0.0)),
        _ => Err(Error::Policy(format!(
            "policy kind does not match variable `{}`",
            data.variable(i).name
        ))),
    }
}

fn name_error(e: Error, data: &Dataset, i: usize) -> Error {
    match e {
        Error::OutOfRange {
            value, lower, upper, ..
        } => Error::OutOfRange {
            column: data.variable(i).name.clone(),
            value,
            lower,
            upper,
        },
        other => other,
    }
}

fn check_structure(structure: &DagStructure, data: &Dataset) -> Result<()> {
    if structure.n() != data.n_vars() {
        return Err(Error::Graph(format!(
            "structure has {} nodes, dataset has {} variables",
            structure.n(),
            data.n_vars()
        )));
    }
    Ok(())
}

/// Full network score with its per-node breakdown. Every family's discrete
/// component is stored in the child's slot.
pub fn network_score(
    policies: &NetworkPolicy,
    structure: &DagStructure,
    data: &Dataset,
    prior: &PriorSpec,
) -> Result<ScoreBreakdown> {
    check_structure(structure, data)?;
    let discrete = data.discretize(policies)?;
    network_score_with(policies, structure, data, &discrete, prior)
}

/// As [`network_score`] with the discretized table supplied by the caller.
pub fn network_score_with(
    policies: &NetworkPolicy,
    structure: &DagStructure,
    data: &Dataset,
    discrete: &DiscreteData,
    prior: &PriorSpec,
) -> Result<ScoreBreakdown> {
    let mut nodes = Vec::with_capacity(data.n_vars());
    for i in 0..data.n_vars() {
        let (continuous, log_prior) = node_parts(i, policies, data, prior)?;
        let counts = family_counts(discrete, i, structure.parents(i));
        nodes.push(NodeScore {
            continuous,
            discrete: discrete_family_score(&counts, &prior.dirichlet),
            log_prior,
        });
    }
    Ok(ScoreBreakdown::from_nodes(nodes))
}

/// Every term of the network score that depends on the policy of `i`: its
/// continuous component, its own family, each child's family and its log
/// prior.
pub fn local_score(
    i: usize,
    policies: &NetworkPolicy,
    structure: &DagStructure,
    data: &Dataset,
    prior: &PriorSpec,
) -> Result<f64> {
    check_structure(structure, data)?;
    policies.check_against(data)?;
    let mut needed = vec![false; data.n_vars()];
    needed[i] = true;
    for &p in structure.parents(i) {
        needed[p] = true;
    }
    for &c in structure.children(i) {
        needed[c] = true;
        for &p in structure.parents(c) {
            needed[p] = true;
        }
    }
    let mut columns = Vec::with_capacity(data.n_vars());
    for (v, &need) in needed.iter().enumerate() {
        columns.push(if need {
            data.discretize_variable(v, policies.get(v))?
        } else {
            Vec::new()
        });
    }
    let discrete = DiscreteData::new(columns, policies.arities());

    let (sc, lp) = node_parts(i, policies, data, prior)?;
    let own = discrete_family_score(&family_counts(&discrete, i, structure.parents(i)), &prior.dirichlet);
    let children: f64 = structure
        .children(i)
        .iter()
        .map(|&c| discrete_family_score(&family_counts(&discrete, c, structure.parents(c)), &prior.dirichlet))
        .sum();
    Ok(sc + own + children + lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnData, VariableMeta};

    fn bounded(values: Vec<f64>, lo: f64, hi: f64) -> Dataset {
        Dataset::from_columns(
            vec![VariableMeta::bounded("x", 0, lo, hi)],
            vec![ColumnData::Continuous(values)],
        )
        .unwrap()
    }

    fn k2() -> PriorSpec {
        PriorSpec::default()
    }

    #[test]
    fn continuous_component_examples() {
        let d = bounded(vec![1.0, 1.5, 3.0], 0.0, 10.0);
        let col = d.continuous(0).unwrap();
        let p = IntervalPolicy::new(vec![2.0], 0.0, 10.0).unwrap();
        let got = continuous_component(col, &p, &k2()).unwrap();
        assert!((got + 5.0 * 2f64.ln()).abs() < 1e-12);

        let single = IntervalPolicy::single(0.0, 10.0).unwrap();
        let got = continuous_component(col, &single, &k2()).unwrap();
        assert!((got - 3.0 * 0.1f64.ln()).abs() < 1e-12);

        // the empty middle interval contributes nothing
        let p = IntervalPolicy::new(vec![2.0, 2.5], 0.0, 10.0).unwrap();
        let got = continuous_component(col, &p, &k2()).unwrap();
        let expect = 2.0 * 0.5f64.ln() + (1.0f64 / 7.5).ln();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn univariate_examples() {
        let d = bounded(vec![0.0, 5.0, 10.0], 0.0, 10.0);
        let single = IntervalPolicy::single(0.0, 10.0).unwrap();
        let got = univariate_score(d.continuous(0).unwrap(), &single, &k2()).unwrap();
        assert!((got - 3.0 * 0.1f64.ln()).abs() < 1e-12);

        let d = bounded(vec![0.0, 1.0, 9.0, 10.0], 0.0, 10.0);
        let p = IntervalPolicy::new(vec![0.5, 9.5], 0.0, 10.0).unwrap();
        let got = univariate_score(d.continuous(0).unwrap(), &p, &k2()).unwrap();
        // S_c = 2 ln 2 - 2 ln 9, S_d = ln(1/180)
        let expect = 2.0 * 2f64.ln() - 2.0 * 9f64.ln() + (1.0f64 / 180.0).ln();
        assert!((got - expect).abs() < 1e-12);
        assert!((got + 8.2011).abs() < 1e-3);
    }

    #[test]
    fn isolating_a_point_raises_continuous_component() {
        let d = bounded(vec![0.0, 4.0, 4.1, 10.0], 0.0, 10.0);
        let col = d.continuous(0).unwrap();
        let coarse = IntervalPolicy::single(0.0, 10.0).unwrap();
        let fine = IntervalPolicy::new(vec![2.0, 4.05, 7.0], 0.0, 10.0).unwrap();
        assert!(
            continuous_component(col, &fine, &k2()).unwrap()
                > continuous_component(col, &coarse, &k2()).unwrap()
        );
    }

    #[test]
    fn abstraction_examples() {
        let prior = k2();
        // identity grouping
        assert_eq!(abstraction_component(&[0, 1, 2, 2], &[0, 1, 2], 3, &prior).unwrap(), 0.0);
        // values {0, 1} in one group, data (0, 0, 1)
        let got = abstraction_component(&[0, 0, 1], &[0, 0], 1, &prior).unwrap();
        assert!((got - (1.0f64 / 12.0).ln()).abs() < 1e-12);
        // empty group
        assert!(abstraction_component(&[0, 1], &[0, 0], 2, &prior).is_err());
    }

    #[test]
    fn multinomial_density_on_continuous_column() {
        let prior = PriorSpec {
            density: DensityModel::MultinomialAbstraction,
            ..PriorSpec::default()
        };
        let d = bounded(vec![1.0, 1.0, 2.0], 0.0, 10.0);
        let col = d.continuous(0).unwrap();
        let single = IntervalPolicy::single(0.0, 10.0).unwrap();
        let got = continuous_component(col, &single, &prior).unwrap();
        assert!((got - (1.0f64 / 12.0).ln()).abs() < 1e-12);
        let split = IntervalPolicy::new(vec![1.5], 0.0, 10.0).unwrap();
        assert_eq!(continuous_component(col, &split, &prior).unwrap(), 0.0);
    }

    #[test]
    fn constant_column_has_zero_continuous_component() {
        let d = Dataset::from_columns(
            vec![VariableMeta::continuous("x", 0)],
            vec![ColumnData::Continuous(vec![7.0, 7.0])],
        )
        .unwrap();
        let col = d.continuous(0).unwrap();
        let (lo, hi) = col.bounds();
        let p = IntervalPolicy::single(lo, hi).unwrap();
        assert_eq!(continuous_component(col, &p, &k2()).unwrap(), 0.0);
    }

    #[test]
    fn prior_validation() {
        let mut p = PriorSpec::default();
        assert!(p.validate(10).is_ok());
        p.dirichlet = DirichletMode::K2 { alpha: 0.0 };
        assert!(p.validate(10).is_err());
        p.dirichlet = DirichletMode::BDeu { ess: 1.0 };
        p.policy_prior = PolicyPrior::PoissonOverR { lambda: 12.0 };
        assert!(p.validate(10).is_err());
        p.policy_prior = PolicyPrior::PoissonOverR { lambda: 1.5 };
        assert!(p.validate(10).is_err());
        p.policy_prior = PolicyPrior::PoissonOverR { lambda: 3.0 };
        assert!(p.validate(10).is_ok());
    }

    #[test]
    fn bdeu_cells() {
        let m = DirichletMode::BDeu { ess: 6.0 };
        assert_eq!(m.cell(2, 3), 1.0);
        assert!(m.depends_on_arity());
        assert!(!DirichletMode::default().depends_on_arity());
    }
}
