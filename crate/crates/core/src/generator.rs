//! Synthetic data from a latent discrete network: each latent `Y_i` is drawn
//! from its CPT, then the observed `X_i` uniformly inside interval `Y_i` of
//! its policy.
//!
//! Randomness: variable `i` owns ChaCha8 stream `i` under the mechanism
//! seed, drawing one uniform for `Y_i` and then one for `X_i` per case, in
//! case order. Output is therefore independent of how sampling is
//! scheduled.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnData, Dataset, DiscreteData, IntervalPolicy, VariableMeta};
use crate::error::{Error, Result};
use crate::graph::DagStructure;
use crate::io::SCHEMA_VERSION;
use crate::scoring::config_index;

const ROW_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Mechanism {
    pub names: Vec<String>,
    pub structure: DagStructure,
    /// `cpts[i][j]` is the distribution of `Y_i` under parent configuration
    /// `j` (mixed radix, first parent most significant).
    pub cpts: Vec<Vec<Vec<f64>>>,
    pub policies: Vec<IntervalPolicy>,
    pub seed: u64,
}

impl Mechanism {
    pub fn new(
        names: Vec<String>,
        structure: DagStructure,
        cpts: Vec<Vec<Vec<f64>>>,
        policies: Vec<IntervalPolicy>,
        seed: u64,
    ) -> Result<Self> {
        let m = Mechanism {
            names,
            structure,
            cpts,
            policies,
            seed,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn n_vars(&self) -> usize {
        self.structure.n()
    }

    pub fn arity(&self, i: usize) -> usize {
        self.policies[i].arity()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.structure.n();
        if self.names.len() != n || self.cpts.len() != n || self.policies.len() != n {
            return Err(Error::Mechanism(format!(
                "{n} nodes but {} names, {} CPTs and {} policies",
                self.names.len(),
                self.cpts.len(),
                self.policies.len()
            )));
        }
        for i in 0..n {
            let name = &self.names[i];
            let r = self.arity(i);
            let (lo, hi) = self.policies[i].bounds();
            if !(lo < hi) {
                return Err(Error::Mechanism(format!("`{name}` needs lower < upper, got [{lo}, {hi}]")));
            }
            let q: usize = self.structure.parents(i).iter().map(|&p| self.arity(p)).product();
            if self.cpts[i].len() != q {
                return Err(Error::Mechanism(format!(
                    "`{name}` has {} CPT rows, expected {q}",
                    self.cpts[i].len()
                )));
            }
            for (j, row) in self.cpts[i].iter().enumerate() {
                if row.len() != r {
                    return Err(Error::Mechanism(format!(
                        "`{name}` row {j} has {} entries but its policy has {r} intervals",
                        row.len()
                    )));
                }
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(Error::Mechanism(format!("`{name}` row {j} has an entry outside [0, 1]")));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(Error::Mechanism(format!("`{name}` row {j} sums to {s}")));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let doc = MechanismDoc {
            schema_version: SCHEMA_VERSION,
            variables: self.names.clone(),
            edges: self.structure.edges(),
            cpts: self.cpts.clone(),
            policies: self
                .policies
                .iter()
                .map(|p| {
                    let (lo, hi) = p.bounds();
                    PolicyDoc {
                        thresholds: p.thresholds().to_vec(),
                        bounds: [lo, hi],
                    }
                })
                .collect(),
            seed: self.seed,
        };
        serde_json::to_value(doc).expect("mechanism serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MechanismDoc = serde_json::from_str(text)?;
        let n = doc.variables.len();
        let structure = DagStructure::from_edges(n, &doc.edges)?;
        let policies = doc
            .policies
            .into_iter()
            .map(|p| IntervalPolicy::new(p.thresholds, p.bounds[0], p.bounds[1]))
            .collect::<Result<Vec<_>>>()?;
        Mechanism::new(doc.variables, structure, doc.cpts, policies, doc.seed)
    }
}

#[derive(Serialize, Deserialize)]
struct PolicyDoc {
    thresholds: Vec<f64>,
    bounds: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct MechanismDoc {
    #[serde(default)]
    schema_version: u32,
    variables: Vec<String>,
    edges: Vec<(usize, usize)>,
    cpts: Vec<Vec<Vec<f64>>>,
    policies: Vec<PolicyDoc>,
    seed: u64,
}

fn stream(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

fn categorical(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = k;
            if u < acc {
                return k;
            }
        }
    }
    last
}

/// Uniform draw from `(lo, hi]`.
fn uniform_in(lo: f64, hi: f64, u: f64) -> f64 {
    let x = hi - u * (hi - lo);
    if x <= lo {
        lo.next_up()
    } else {
        x
    }
}

/// Draws `n_cases` cases. Returns the observed data, declared with the
/// policy bounds, and the latent table of interval codes.
pub fn sample_dataset(m: &Mechanism, n_cases: usize) -> Result<(Dataset, DiscreteData)> {
    if n_cases == 0 {
        return Err(Error::Validation("case count must be at least 1".into()));
    }
    m.validate()?;
    let n = m.n_vars();
    let arities: Vec<usize> = (0..n).map(|i| m.arity(i)).collect();
    let mut latent: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut observed: Vec<Vec<f64>> = vec![Vec::new(); n];
    for &i in m.structure.topological_order() {
        let mut rng = stream(m.seed, i);
        let parents = m.structure.parents(i);
        let parent_arities: Vec<usize> = parents.iter().map(|&p| arities[p]).collect();
        let mut ys = Vec::with_capacity(n_cases);
        let mut xs = Vec::with_capacity(n_cases);
        let mut codes = vec![0usize; parents.len()];
        // parents' latent columns are read by case index
        #[allow(clippy::needless_range_loop)]
        for case in 0..n_cases {
            for (c, &p) in codes.iter_mut().zip(parents) {
                *c = latent[p][case];
            }
            let j = config_index(&codes, &parent_arities);
            let y = categorical(&m.cpts[i][j], rng.gen::<f64>());
            let (lo, hi) = m.policies[i].interval(y);
            ys.push(y);
            xs.push(uniform_in(lo, hi, rng.gen::<f64>()));
        }
        latent[i] = ys;
        observed[i] = xs;
    }
    let metas = (0..n)
        .map(|i| {
            let (lo, hi) = m.policies[i].bounds();
            VariableMeta::bounded(m.names[i].clone(), i, lo, hi)
        })
        .collect();
    let data = Dataset::from_columns(metas, observed.into_iter().map(ColumnData::Continuous).collect())?;
    Ok((data, DiscreteData::new(latent, arities)))
}

/// A random mechanism over `X1..Xn`, every variable with `r` latent values
/// and evenly spaced thresholds on `[0, 1]`.
///
/// Node `i` draws a parent count uniformly from `0..=min(max_parents, i)`
/// and then that many earlier nodes; CPT rows are Dirichlet(1).
pub fn random_mechanism(n: usize, max_parents: usize, r: usize, seed: u64) -> Result<Mechanism> {
    if n == 0 {
        return Err(Error::Validation("a mechanism needs at least one variable".into()));
    }
    if r < 2 {
        return Err(Error::Validation(format!("latent arity must be at least 2, got {r}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parent_sets = Vec::with_capacity(n);
    for i in 0..n {
        let k = rng.gen_range(0..=max_parents.min(i));
        let mut ps = sample(&mut rng, i, k).into_vec();
        ps.sort_unstable();
        parent_sets.push(ps);
    }
    let structure = crate::graph::validate_dag(parent_sets)?;
    let thresholds: Vec<f64> = (1..r).map(|k| k as f64 / r as f64).collect();
    let policy = IntervalPolicy::new(thresholds, 0.0, 1.0)?;
    let mut cpts = Vec::with_capacity(n);
    for i in 0..n {
        let q = r.pow(structure.parents(i).len() as u32);
        let rows = (0..q)
            .map(|_| {
                let w: Vec<f64> = (0..r).map(|_| rng.sample::<f64, _>(Exp1)).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|x| x / s).collect()
            })
            .collect();
        cpts.push(rows);
    }
    Mechanism::new(
        (1..=n).map(|i| format!("X{i}")).collect(),
        structure,
        cpts,
        vec![policy; n],
        seed,
    )
}
