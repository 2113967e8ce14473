//! Independent oracles and random instance builders shared by the
//! integration tests. Nothing here calls into the scoring or graph code it
//! is used to check.

#![allow(dead_code)]

use bayesdisc::dataset::{ColumnData, Dataset, VariableMeta};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Log marginal likelihood of a family as a product of sequential
/// predictive probabilities: case `t` contributes
/// `(a_jk + n_jk) / (a_j + n_j)` with counts over cases before `t`.
pub fn sequential_family_score(
    child: &[usize],
    r: usize,
    parents: &[&[usize]],
    parent_arities: &[usize],
    cell: impl Fn(usize, usize) -> f64,
) -> f64 {
    let q: usize = parent_arities.iter().product();
    let a_cell = cell(r, q);
    let mut n_jk = vec![0usize; q * r];
    let mut n_j = vec![0usize; q];
    let mut total = 0.0;
    for t in 0..child.len() {
        let mut j = 0;
        for (p, &ar) in parents.iter().zip(parent_arities) {
            j = j * ar + p[t];
        }
        let k = child[t];
        let p = (a_cell + n_jk[j * r + k] as f64) / (a_cell * r as f64 + n_j[j] as f64);
        total += p.ln();
        n_jk[j * r + k] += 1;
        n_j[j] += 1;
    }
    total
}

/// d-separation through the moralized ancestral graph.
pub fn moral_dsep(parents: &[Vec<usize>], i: usize, j: usize, z: &[usize]) -> bool {
    let n = parents.len();
    let mut keep = vec![false; n];
    let mut stack: Vec<usize> = [i, j].iter().chain(z).copied().collect();
    while let Some(v) = stack.pop() {
        if !keep[v] {
            keep[v] = true;
            stack.extend(parents[v].iter().copied());
        }
    }
    let mut adj = vec![vec![false; n]; n];
    for v in (0..n).filter(|&v| keep[v]) {
        for &p in &parents[v] {
            adj[p][v] = true;
            adj[v][p] = true;
        }
        for &a in &parents[v] {
            for &b in &parents[v] {
                if a != b {
                    adj[a][b] = true;
                }
            }
        }
    }
    let blocked: Vec<bool> = (0..n).map(|v| z.contains(&v)).collect();
    let mut seen = vec![false; n];
    let mut stack = vec![i];
    seen[i] = true;
    while let Some(v) = stack.pop() {
        if v == j {
            return false;
        }
        for w in 0..n {
            if adj[v][w] && keep[w] && !blocked[w] && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    true
}

/// Random DAG consistent with a random node order; each ordered pair gets
/// an edge with probability `p`, at most `max_parents` per node.
pub fn random_parent_sets(rng: &mut ChaCha8Rng, n: usize, p: f64, max_parents: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    for k in (1..n).rev() {
        order.swap(k, rng.gen_range(0..=k));
    }
    let mut parents = vec![Vec::new(); n];
    for b in 1..n {
        for a in 0..b {
            if parents[order[b]].len() < max_parents && rng.gen_bool(p) {
                parents[order[b]].push(order[a]);
            }
        }
    }
    for ps in &mut parents {
        ps.sort_unstable();
    }
    parents
}

pub fn random_codes(rng: &mut ChaCha8Rng, n_rows: usize, arity: usize) -> Vec<usize> {
    (0..n_rows).map(|_| rng.gen_range(0..arity)).collect()
}

/// Continuous values on a coarse grid so repeats occur; at most
/// `max_distinct` distinct values.
pub fn random_grid_values(rng: &mut ChaCha8Rng, n_rows: usize, max_distinct: usize) -> Vec<f64> {
    let levels = rng.gen_range(1..=max_distinct);
    let step = rng.gen_range(0.25..2.0);
    (0..n_rows).map(|_| rng.gen_range(0..levels) as f64 * step - 3.0).collect()
}

pub fn mixed_dataset(metas: Vec<VariableMeta>, cols: Vec<ColumnData>) -> Dataset {
    Dataset::from_columns(metas, cols).expect("valid test dataset")
}

/// Two-sided one-sample Kolmogorov-Smirnov statistic against U(lo, hi).
pub fn ks_uniform(values: &[f64], lo: f64, hi: f64) -> f64 {
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
            (f - k as f64 / n).max((k + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}
