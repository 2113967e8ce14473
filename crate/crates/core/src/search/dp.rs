//! Exact single-variable policy search.
//!
//! With every other policy fixed, the local score of a continuous variable
//! splits into a part that depends only on its interval count `r` and a sum
//! of per-interval terms. An interval is a contiguous block of the column's
//! distinct values, and its term collects
//!
//! * the continuous component of the values inside it,
//! * the cells of the variable's own family that fall inside it,
//! * for every child, all terms of the child's family whose parent
//!   configuration places this variable in the interval.
//!
//! The `r`-only part holds the Γ normalizers of the variable's own family
//! (their hyperparameter sums depend on `r` but not on the thresholds) and the
//! policy prior. Counts add over disjoint intervals, so a table over (number
//! of intervals, first distinct value of the remaining suffix) finds the
//! optimum in `O(r_max · D²)` interval evaluations, where `D` is the number
//! of distinct values. Interval statistics come from prefix sums over the
//! sorted order.
//!
//! Under K2 the interval terms do not depend on `r`, so one table serves all
//! interval counts. Under BDeu the per-cell hyperparameters of the variable's
//! family and of its children's families change with `r`, so each `r` gets
//! its own table.

use crate::dataset::{Dataset, DiscretizationPolicy, IntervalPolicy, NetworkPolicy};
use crate::error::{Error, Result};
use crate::graph::DagStructure;
use crate::scoring::{ln_gamma_unchecked, local_score, policy_log_prior, DensityModel, DirichletMode, PriorSpec};

use super::{tie_tolerance, SearchConfig};

/// Largest distinct-value count for which interval terms are tabulated
/// instead of recomputed inside the recursion.
const TABLE_LIMIT: usize = 1500;

#[derive(Clone, Debug, PartialEq)]
pub struct VariableOptimum {
    pub policy: IntervalPolicy,
    /// Local score of the returned policy.
    pub score: f64,
}

/// Best policy for continuous variable `i` with every other policy fixed,
/// using the configured interval cap.
pub fn optimize_variable(
    i: usize,
    policies: &NetworkPolicy,
    structure: &DagStructure,
    data: &Dataset,
    prior: &PriorSpec,
    config: &SearchConfig,
) -> Result<VariableOptimum> {
    optimize_variable_with_limit(i, policies, structure, data, prior, config.resolved_r_max(data.n_rows()))
}

/// As [`optimize_variable`] with an explicit cap on the interval count.
///
/// Ties prefer fewer intervals, then the lexicographically smallest
/// threshold sequence.
pub fn optimize_variable_with_limit(
    i: usize,
    policies: &NetworkPolicy,
    structure: &DagStructure,
    data: &Dataset,
    prior: &PriorSpec,
    r_max: usize,
) -> Result<VariableOptimum> {
    policies.check_against(data)?;
    let col = data.continuous(i).ok_or_else(|| {
        Error::Policy(format!("variable `{}` is not continuous", data.variable(i).name))
    })?;
    let (lower, upper) = match policies.get(i) {
        DiscretizationPolicy::Intervals(p) => p.bounds(),
        DiscretizationPolicy::Trivial { .. } => col.bounds(),
    };
    let d = col.distinct_values().len();
    if d == 1 {
        let policy = IntervalPolicy::single(lower, upper)?;
        let score = score_with(i, &policy, policies, structure, data, prior)?;
        return Ok(VariableOptimum { policy, score });
    }

    let problem = LocalProblem::build(i, lower, upper, policies, structure, data, prior)?;
    let k_max = r_max.max(1).min(d);

    let shared = !problem.layer_dependent();
    let mut shared_table = None;
    let mut totals = Vec::with_capacity(k_max);
    for r in 1..=k_max {
        let a_r = problem.arity_term(r)?;
        let value = if shared {
            let table = shared_table.get_or_insert_with(|| {
                let layer = problem.layer(1);
                problem.solve(&layer, k_max)
            });
            table.f[r][0]
        } else {
            let layer = problem.layer(r);
            problem.solve(&layer, r).f[r][0]
        };
        totals.push(a_r + value);
    }

    let best = totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        // no interval count has prior mass: fall back to a single interval
        let policy = IntervalPolicy::single(lower, upper)?;
        let score = score_with(i, &policy, policies, structure, data, prior)?;
        return Ok(VariableOptimum { policy, score });
    }
    let floor = best - tie_tolerance(best);
    let r = 1 + totals.iter().position(|&t| t >= floor).expect("best is attained");

    let layer = problem.layer(r);
    let table = match shared_table {
        Some(t) => t,
        None => problem.solve(&layer, r),
    };
    let a_r = problem.arity_term(r)?;
    let mut need = floor - a_r;
    let mut cuts = Vec::with_capacity(r - 1);
    let mut start = 0;
    let mut score = a_r;
    for k in (1..=r).rev() {
        let end = if k == 1 {
            d - 1
        } else {
            (start..=d - k)
                .find(|&b| table.block(&problem, &layer, start, b) + table.f[k - 1][b + 1] >= need)
                .expect("the optimum is reachable")
        };
        let g = table.block(&problem, &layer, start, end);
        need -= g;
        score += g;
        if k > 1 {
            cuts.push(end);
        }
        start = end + 1;
    }
    let thresholds = cuts.iter().map(|&b| col.candidates()[b]).collect();
    let policy = IntervalPolicy::new(thresholds, lower, upper)?;
    Ok(VariableOptimum { policy, score })
}

fn score_with(
    i: usize,
    policy: &IntervalPolicy,
    policies: &NetworkPolicy,
    structure: &DagStructure,
    data: &Dataset,
    prior: &PriorSpec,
) -> Result<f64> {
    let mut trial = policies.clone();
    trial.set(i, DiscretizationPolicy::Intervals(policy.clone()));
    local_score(i, &trial, structure, data, prior)
}

/// lnΓ(base + n) for n in 0..=len.
struct LnGammaRun {
    values: Vec<f64>,
}

impl LnGammaRun {
    fn new(base: f64, len: usize) -> Self {
        LnGammaRun {
            values: (0..=len).map(|n| ln_gamma_unchecked(base + n as f64)).collect(),
        }
    }

    #[inline]
    fn at(&self, n: u32) -> f64 {
        self.values[n as usize]
    }
}

struct ChildTable {
    r: usize,
    q_other: usize,
    /// prefix[(d * q_other + j) * r + l]: rows with rank < d, other-parent
    /// configuration j and child code l.
    prefix: Vec<u32>,
}

struct LocalProblem<'a> {
    d: usize,
    n_rows: usize,
    candidates: &'a [f64],
    lower: f64,
    upper: f64,
    distinct_counts: &'a [usize],
    prefix_n: Vec<usize>,
    self_q: usize,
    /// self_prefix[d * q + j]: rows with rank < d and parent configuration j.
    self_prefix: Vec<u32>,
    self_margins: Vec<u32>,
    children: Vec<ChildTable>,
    prior: PriorSpec,
}

/// Hyperparameter-dependent quantities for one interval count.
struct Layer {
    self_cell: LnGammaRun,
    children: Vec<(LnGammaRun, LnGammaRun)>,
    /// Prefix over distinct values of lnΓ(cell + n_v) − lnΓ(cell), used by
    /// the multinomial density under K2.
    value_prefix: Option<Vec<f64>>,
}

struct DpTable {
    f: Vec<Vec<f64>>,
    blocks: Option<Vec<f64>>,
    d: usize,
}

impl DpTable {
    #[inline]
    fn block(&self, problem: &LocalProblem, layer: &Layer, a: usize, b: usize) -> f64 {
        match &self.blocks {
            Some(t) => t[a * self.d + b],
            None => problem.block(layer, a, b),
        }
    }
}

impl<'a> LocalProblem<'a> {
    fn build(
        i: usize,
        lower: f64,
        upper: f64,
        policies: &NetworkPolicy,
        structure: &DagStructure,
        data: &'a Dataset,
        prior: &PriorSpec,
    ) -> Result<Self> {
        let col = data.continuous(i).expect("checked by caller");
        let d = col.distinct_values().len();
        let n_rows = data.n_rows();
        let ranks = col.ranks();

        let mut cache: Vec<Option<Vec<usize>>> = vec![None; data.n_vars()];
        let mut codes = |v: usize| -> Result<()> {
            if cache[v].is_none() {
                cache[v] = Some(data.discretize_variable(v, policies.get(v))?);
            }
            Ok(())
        };
        for &p in structure.parents(i) {
            codes(p)?;
        }
        for &c in structure.children(i) {
            codes(c)?;
            for &p in structure.parents(c) {
                if p != i {
                    codes(p)?;
                }
            }
        }
        let arity = |v: usize| policies.get(v).arity();
        let config_of = |parents: &[usize], row: usize| -> usize {
            parents
                .iter()
                .fold(0, |acc, &p| acc * arity(p) + cache[p].as_ref().unwrap()[row])
        };

        let mut prefix_n = vec![0usize; d + 1];
        for (k, &n) in col.distinct_counts().iter().enumerate() {
            prefix_n[k + 1] = prefix_n[k] + n;
        }

        let self_parents = structure.parents(i);
        let self_q: usize = self_parents.iter().map(|&p| arity(p)).product();
        let mut self_counts = vec![0u32; (d + 1) * self_q];
        let mut self_margins = vec![0u32; self_q];
        for row in 0..n_rows {
            let j = config_of(self_parents, row);
            self_counts[(ranks[row] + 1) * self_q + j] += 1;
            self_margins[j] += 1;
        }
        accumulate(&mut self_counts, self_q);

        let mut children = Vec::with_capacity(structure.children(i).len());
        for &c in structure.children(i) {
            let others: Vec<usize> = structure.parents(c).iter().copied().filter(|&p| p != i).collect();
            let r = arity(c);
            let q_other: usize = others.iter().map(|&p| arity(p)).product();
            let width = q_other * r;
            let child_codes = cache[c].as_ref().unwrap();
            let mut prefix = vec![0u32; (d + 1) * width];
            for row in 0..n_rows {
                let j = config_of(&others, row);
                prefix[(ranks[row] + 1) * width + j * r + child_codes[row]] += 1;
            }
            accumulate(&mut prefix, width);
            children.push(ChildTable { r, q_other, prefix });
        }

        Ok(LocalProblem {
            d,
            n_rows,
            candidates: col.candidates(),
            lower,
            upper,
            distinct_counts: col.distinct_counts(),
            prefix_n,
            self_q,
            self_prefix: self_counts,
            self_margins,
            children,
            prior: *prior,
        })
    }

    fn layer_dependent(&self) -> bool {
        self.prior.dirichlet.depends_on_arity()
    }

    fn layer(&self, r: usize) -> Layer {
        let dirichlet = &self.prior.dirichlet;
        let n = self.n_rows;
        let self_cell = LnGammaRun::new(dirichlet.cell(r, self.self_q), n);
        let children = self
            .children
            .iter()
            .map(|c| {
                let cell = dirichlet.cell(c.r, c.q_other * r);
                (LnGammaRun::new(cell, n), LnGammaRun::new(cell * c.r as f64, n))
            })
            .collect();
        let value_prefix = match (self.prior.density, dirichlet) {
            (DensityModel::MultinomialAbstraction, DirichletMode::K2 { alpha }) => {
                let base = ln_gamma_unchecked(*alpha);
                let mut p = vec![0.0; self.d + 1];
                for (k, &nv) in self.distinct_counts.iter().enumerate() {
                    p[k + 1] = p[k] + ln_gamma_unchecked(alpha + nv as f64) - base;
                }
                Some(p)
            }
            _ => None,
        };
        Layer {
            self_cell,
            children,
            value_prefix,
        }
    }

    /// Terms that depend on the interval count only.
    fn arity_term(&self, r: usize) -> Result<f64> {
        let row = self.prior.dirichlet.cell(r, self.self_q) * r as f64;
        let ln_row = ln_gamma_unchecked(row);
        let mut total = 0.0;
        for &nj in &self.self_margins {
            if nj > 0 {
                total += ln_row - ln_gamma_unchecked(row + nj as f64);
            }
        }
        Ok(total + policy_log_prior(r, self.d - 1, self.n_rows, &self.prior.policy_prior)?)
    }

    /// Score of the interval covering distinct values `a..=b`.
    fn block(&self, layer: &Layer, a: usize, b: usize) -> f64 {
        let n = self.prefix_n[b + 1] - self.prefix_n[a];
        let mut s = match self.prior.density {
            DensityModel::UniformWithinInterval => {
                let left = if a == 0 { self.lower } else { self.candidates[a - 1] };
                let right = if b == self.d - 1 { self.upper } else { self.candidates[b] };
                -(n as f64) * (right - left).ln()
            }
            DensityModel::MultinomialAbstraction => {
                let m = b - a + 1;
                let cell = self.prior.dirichlet.cell(m, 1);
                let row = cell * m as f64;
                let values = match &layer.value_prefix {
                    Some(p) => p[b + 1] - p[a],
                    None => {
                        let base = ln_gamma_unchecked(cell);
                        self.distinct_counts[a..=b]
                            .iter()
                            .map(|&nv| ln_gamma_unchecked(cell + nv as f64) - base)
                            .sum()
                    }
                };
                ln_gamma_unchecked(row) - ln_gamma_unchecked(row + n as f64) + values
            }
        };

        let q = self.self_q;
        let lo = &self.self_prefix[a * q..(a + 1) * q];
        let hi = &self.self_prefix[(b + 1) * q..(b + 2) * q];
        let base = layer.self_cell.at(0);
        for (h, l) in hi.iter().zip(lo) {
            let cnt = h - l;
            if cnt > 0 {
                s += layer.self_cell.at(cnt) - base;
            }
        }

        for (child, (cell, row)) in self.children.iter().zip(&layer.children) {
            let width = child.q_other * child.r;
            let lo = &child.prefix[a * width..(a + 1) * width];
            let hi = &child.prefix[(b + 1) * width..(b + 2) * width];
            let cell_base = cell.at(0);
            let row_base = row.at(0);
            for j in 0..child.q_other {
                let mut tot = 0u32;
                let mut inner = 0.0;
                for l in j * child.r..(j + 1) * child.r {
                    let cnt = hi[l] - lo[l];
                    if cnt > 0 {
                        inner += cell.at(cnt) - cell_base;
                        tot += cnt;
                    }
                }
                if tot > 0 {
                    s += row_base - row.at(tot) + inner;
                }
            }
        }
        s
    }

    /// `f[k][a]`: best sum of `k` interval terms covering distinct values
    /// `a..d`.
    fn solve(&self, layer: &Layer, k_max: usize) -> DpTable {
        let d = self.d;
        let blocks = (d <= TABLE_LIMIT).then(|| {
            let mut t = vec![f64::NEG_INFINITY; d * d];
            for a in 0..d {
                for b in a..d {
                    t[a * d + b] = self.block(layer, a, b);
                }
            }
            t
        });
        let mut table = DpTable {
            f: vec![vec![f64::NEG_INFINITY; d + 1]; k_max + 1],
            blocks,
            d,
        };
        table.f[0][d] = 0.0;
        for k in 1..=k_max {
            for a in 0..=d - k {
                let mut best = f64::NEG_INFINITY;
                for b in a..=d - k {
                    let v = table.block(self, layer, a, b) + table.f[k - 1][b + 1];
                    if v > best {
                        best = v;
                    }
                }
                table.f[k][a] = best;
            }
        }
        table
    }
}

/// Turns per-rank counts stored at `(rank + 1) * width` into prefix sums.
fn accumulate(counts: &mut [u32], width: usize) {
    let rows = counts.len() / width;
    for d in 1..rows {
        for x in 0..width {
            counts[d * width + x] += counts[(d - 1) * width + x];
        }
    }
}
