use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{Dataset, DiscreteData, NetworkPolicy};
use crate::error::Result;
use crate::graph::DagStructure;
use crate::scoring::{discrete_family_score, family_counts, network_score, DirichletMode, PriorSpec, ScoreBreakdown};

use super::ascent::{affected_set, coordinate_ascent, coordinate_ascent_over, initial_policies};
use super::{EdgeOp, SearchConfig, SearchTrace, TraceEvent};

/// Output of a joint structure and discretization search.
#[derive(Clone, Debug)]
pub struct LearnedNetwork {
    pub structure: DagStructure,
    pub policies: NetworkPolicy,
    pub breakdown: ScoreBreakdown,
    pub trace: SearchTrace,
}

#[derive(Clone, Copy, Debug)]
struct Move {
    op: EdgeOp,
    from: usize,
    to: usize,
}

/// Greedy hill climbing over DAGs, starting from the empty graph, with the
/// policies re-optimized around every `interleave_period` accepted edits.
///
/// Candidate edits are scored on the current discretized table and the best
/// one is accepted while it gains more than `epsilon`. Equal gains go to the
/// edit met first in an order shuffled once from `seed`. When no edit helps,
/// a full coordinate ascent runs; the search stops once that also changes
/// nothing. With `structure_search` off the graph stays empty.
pub fn hill_climb_structure(data: &Dataset, prior: &PriorSpec, config: &SearchConfig) -> Result<LearnedNetwork> {
    config.validate()?;
    prior.validate(data.n_rows())?;
    let n = data.n_vars();
    let r_max = config.resolved_r_max(data.n_rows());
    let mut structure = DagStructure::empty(n);
    let mut policies = initial_policies(data, &config.init, r_max)?;
    let mut trace = SearchTrace::new(network_score(&policies, &structure, data, prior)?.total);
    let discrete_mask: Vec<bool> = (0..n).map(|v| !data.is_continuous(v)).collect();

    if !config.structure_search || n < 2 {
        let (p, t) = coordinate_ascent(&policies, &structure, data, prior, config)?;
        policies = p;
        trace.absorb(t);
    } else {
        let mut moves: Vec<Move> = Vec::with_capacity(n * (n - 1) * 2);
        for from in 0..n {
            for to in 0..n {
                if from != to {
                    for op in [EdgeOp::Add, EdgeOp::Delete, EdgeOp::Reverse] {
                        moves.push(Move { op, from, to });
                    }
                }
            }
        }
        moves.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));

        let mut since_refine = 0usize;
        let mut touched: Vec<usize> = Vec::new();
        loop {
            let table = data.discretize(&policies)?;
            let family: Vec<f64> = (0..n)
                .map(|v| family_score(&table, v, structure.parents(v), &prior.dirichlet))
                .collect();
            let deltas: Vec<Option<f64>> = moves
                .par_iter()
                .map(|m| move_delta(m, &structure, &table, &family, &prior.dirichlet, config.max_parents))
                .collect();
            let mut best: Option<(usize, f64)> = None;
            for (k, d) in deltas.iter().enumerate() {
                if let Some(d) = *d {
                    if best.is_none_or(|(_, b)| d > b) {
                        best = Some((k, d));
                    }
                }
            }

            match best {
                Some((k, delta)) if delta > config.epsilon => {
                    let m = moves[k];
                    let before = network_score(&policies, &structure, data, prior)?.total;
                    structure = apply(&structure, &m)?;
                    let total = network_score(&policies, &structure, data, prior)?.total;
                    trace.events.push(TraceEvent::Edge {
                        op: m.op,
                        from: m.from,
                        to: m.to,
                        delta: total - before,
                        total,
                    });
                    touched.extend([m.from, m.to]);
                    since_refine += 1;
                    if since_refine >= config.interleave_period {
                        since_refine = 0;
                        let scope = refine_scope(&structure, &touched, &discrete_mask);
                        touched.clear();
                        let (p, t) = coordinate_ascent_over(&scope, &policies, &structure, data, prior, config)?;
                        policies = p;
                        trace.absorb(t);
                    }
                }
                _ => {
                    let (p, t) = coordinate_ascent(&policies, &structure, data, prior, config)?;
                    let changed = !t.events.is_empty();
                    policies = p;
                    trace.absorb(t);
                    touched.clear();
                    since_refine = 0;
                    if !changed {
                        break;
                    }
                }
            }
        }
    }

    let breakdown = network_score(&policies, &structure, data, prior)?;
    Ok(LearnedNetwork {
        structure,
        policies,
        breakdown,
        trace,
    })
}

fn refine_scope(structure: &DagStructure, touched: &[usize], discrete: &[bool]) -> Vec<usize> {
    let mut keep = vec![false; structure.n()];
    for &v in touched {
        if !discrete[v] {
            keep[v] = true;
        }
        for j in affected_set(structure, v, discrete) {
            keep[j] = true;
        }
    }
    (0..structure.n()).filter(|&v| keep[v]).collect()
}

fn family_score(table: &DiscreteData, child: usize, parents: &[usize], dirichlet: &DirichletMode) -> f64 {
    discrete_family_score(&family_counts(table, child, parents), dirichlet)
}

fn with_parent(parents: &[usize], p: usize) -> Vec<usize> {
    let mut out = parents.to_vec();
    out.push(p);
    out.sort_unstable();
    out
}

fn without_parent(parents: &[usize], p: usize) -> Vec<usize> {
    parents.iter().copied().filter(|&q| q != p).collect()
}

/// Score change of a legal move, `None` when the move is not applicable.
fn move_delta(
    m: &Move,
    g: &DagStructure,
    table: &DiscreteData,
    family: &[f64],
    dirichlet: &DirichletMode,
    max_parents: usize,
) -> Option<f64> {
    let (u, v) = (m.from, m.to);
    match m.op {
        EdgeOp::Add => {
            if g.has_edge(u, v) || g.has_edge(v, u) || g.parents(v).len() >= max_parents || g.has_path(v, u) {
                return None;
            }
            Some(family_score(table, v, &with_parent(g.parents(v), u), dirichlet) - family[v])
        }
        EdgeOp::Delete => {
            if !g.has_edge(u, v) {
                return None;
            }
            Some(family_score(table, v, &without_parent(g.parents(v), u), dirichlet) - family[v])
        }
        EdgeOp::Reverse => {
            if !g.has_edge(u, v) || g.parents(u).len() >= max_parents {
                return None;
            }
            // acyclic iff no other u -> v path remains
            let removed = g.with_edge_removed(u, v).ok()?;
            if removed.has_path(u, v) {
                return None;
            }
            let dv = family_score(table, v, &without_parent(g.parents(v), u), dirichlet) - family[v];
            let du = family_score(table, u, &with_parent(g.parents(u), v), dirichlet) - family[u];
            Some(dv + du)
        }
    }
}

fn apply(g: &DagStructure, m: &Move) -> Result<DagStructure> {
    match m.op {
        EdgeOp::Add => g.with_edge_added(m.from, m.to),
        EdgeOp::Delete => g.with_edge_removed(m.from, m.to),
        EdgeOp::Reverse => g.with_edge_reversed(m.from, m.to),
    }
}
