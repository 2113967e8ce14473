//! Directed acyclic graphs over variable indices.
//!
//! Parent sets are the primary representation; child lists are materialized
//! alongside and rebuilt on every edit, so both are always consistent.
//! Edits return new structures instead of mutating in place.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DagStructure {
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    order: Vec<usize>,
}

/// Checks acyclicity and index validity, returning the structure with a
/// topological order (ties broken by smallest index first).
pub fn validate_dag(parent_sets: Vec<Vec<usize>>) -> Result<DagStructure> {
    let n = parent_sets.len();
    let mut parents = parent_sets;
    for (i, ps) in parents.iter_mut().enumerate() {
        ps.sort_unstable();
        ps.dedup();
        if let Some(&bad) = ps.iter().find(|&&p| p >= n) {
            return Err(Error::Graph(format!("node {i} has parent {bad} outside 0..{n}")));
        }
        if ps.contains(&i) {
            return Err(Error::Graph(format!("node {i} is its own parent")));
        }
    }
    let mut children = vec![Vec::new(); n];
    for (i, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(i);
        }
    }

    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() < n {
        return Err(Error::Cycle(find_cycle(&parents, &indegree)));
    }
    Ok(DagStructure {
        parents,
        children,
        order,
    })
}

/// Walks parent links among the nodes Kahn's algorithm could not remove;
/// every such node has a remaining parent, so the walk must revisit a node.
fn find_cycle(parents: &[Vec<usize>], indegree: &[usize]) -> Vec<usize> {
    let stuck = |v: usize| indegree[v] > 0;
    let start = (0..parents.len()).find(|&v| stuck(v)).expect("a stuck node");
    let mut path = vec![start];
    let mut pos = vec![usize::MAX; parents.len()];
    pos[start] = 0;
    let mut v = start;
    loop {
        let p = *parents[v].iter().find(|&&p| stuck(p)).expect("stuck parent");
        if pos[p] != usize::MAX {
            let mut cycle = path[pos[p]..].to_vec();
            // path follows parent links; report it in edge direction
            cycle.reverse();
            return cycle;
        }
        pos[p] = path.len();
        path.push(p);
        v = p;
    }
}

impl DagStructure {
    pub fn empty(n: usize) -> Self {
        DagStructure {
            parents: vec![Vec::new(); n],
            children: vec![Vec::new(); n],
            order: (0..n).collect(),
        }
    }

    /// Builds from `(from, to)` edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut parents = vec![Vec::new(); n];
        for &(from, to) in edges {
            if to >= n {
                return Err(Error::Graph(format!("edge target {to} outside 0..{n}")));
            }
            parents[to].push(from);
        }
        validate_dag(parents)
    }

    pub fn n(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn parent_sets(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.parents[to].binary_search(&from).is_ok()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (to, ps) in self.parents.iter().enumerate() {
            out.extend(ps.iter().map(|&from| (from, to)));
        }
        out.sort_unstable();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn with_edge_added(&self, from: usize, to: usize) -> Result<Self> {
        if self.has_edge(from, to) {
            return Err(Error::Graph(format!("edge {from} -> {to} already present")));
        }
        let mut parents = self.parents.clone();
        parents[to].push(from);
        validate_dag(parents)
    }

    pub fn with_edge_removed(&self, from: usize, to: usize) -> Result<Self> {
        if !self.has_edge(from, to) {
            return Err(Error::Graph(format!("edge {from} -> {to} not present")));
        }
        let mut parents = self.parents.clone();
        parents[to].retain(|&p| p != from);
        validate_dag(parents)
    }

    pub fn with_edge_reversed(&self, from: usize, to: usize) -> Result<Self> {
        if !self.has_edge(from, to) {
            return Err(Error::Graph(format!("edge {from} -> {to} not present")));
        }
        let mut parents = self.parents.clone();
        parents[to].retain(|&p| p != from);
        parents[from].push(to);
        validate_dag(parents)
    }

    /// True when a directed path `from -> ... -> to` exists.
    pub fn has_path(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.n()];
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            for &c in &self.children[v] {
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        false
    }

    /// Ancestors of `seeds`, the seeds included.
    pub fn ancestors_mask(&self, seeds: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.n()];
        let mut stack: Vec<usize> = seeds.to_vec();
        for &s in seeds {
            mask[s] = true;
        }
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !mask[p] {
                    mask[p] = true;
                    stack.push(p);
                }
            }
        }
        mask
    }

    /// Parents, children and the children's other parents of `i`.
    pub fn markov_blanket(&self, i: usize) -> BTreeSet<usize> {
        let mut mb: BTreeSet<usize> = self.parents[i].iter().copied().collect();
        for &c in &self.children[i] {
            mb.insert(c);
            mb.extend(self.parents[c].iter().copied());
        }
        mb.remove(&i);
        mb
    }

    /// Whether `i` and `j` are d-separated given `given`.
    ///
    /// Reachability traversal over (node, direction) states: a trail enters
    /// a node either from a child (moving up) or from a parent (moving down).
    /// Non-colliders pass only when unobserved; colliders pass only when they
    /// or one of their descendants is observed.
    ///
    /// Requires `i != j` and neither endpoint in `given`.
    pub fn d_separated(&self, i: usize, j: usize, given: &[usize]) -> bool {
        debug_assert!(i != j, "d-separation needs distinct endpoints");
        debug_assert!(!given.contains(&i) && !given.contains(&j));
        let n = self.n();
        let mut observed = vec![false; n];
        for &z in given {
            observed[z] = true;
        }
        let anc = self.ancestors_mask(given);

        // visited[2v] = entered v moving up, visited[2v + 1] = moving down
        let mut visited = vec![false; 2 * n];
        let mut queue = VecDeque::new();
        queue.push_back((i, true));
        while let Some((v, up)) = queue.pop_front() {
            let slot = 2 * v + usize::from(!up);
            if visited[slot] {
                continue;
            }
            visited[slot] = true;
            if v == j && !observed[v] {
                return false;
            }
            if up {
                if !observed[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                    queue.extend(self.children[v].iter().map(|&c| (c, false)));
                }
            } else {
                if !observed[v] {
                    queue.extend(self.children[v].iter().map(|&c| (c, false)));
                }
                if anc[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                }
            }
        }
        true
    }

    /// Whether some subset of `allowed` d-separates `i` and `j`.
    ///
    /// If any subset of a node set `R` separates two nodes, then so does
    /// `R ∩ An({i, j})`, so a single query suffices.
    pub fn separable_within(&self, i: usize, j: usize, allowed: &[bool]) -> bool {
        let anc = self.ancestors_mask(&[i, j]);
        let z: Vec<usize> = (0..self.n())
            .filter(|&v| v != i && v != j && allowed[v] && anc[v])
            .collect();
        self.d_separated(i, j, &z)
    }

    /// Structure over `2n` nodes where every `X_i` (index `i`) has its
    /// discretized counterpart `Y_i` (index `n + i`) as unique parent and
    /// `Y_i`'s parents are the `Y_j` of `X_i`'s parents.
    pub fn augment(&self) -> DagStructure {
        let n = self.n();
        let mut parents = Vec::with_capacity(2 * n);
        for i in 0..n {
            parents.push(vec![n + i]);
        }
        for i in 0..n {
            parents.push(self.parents[i].iter().map(|&p| n + p).collect());
        }
        validate_dag(parents).expect("augmenting a DAG keeps it acyclic")
    }

    /// Graphviz DOT text, one edge per parent relation.
    pub fn to_dot(&self, names: &[String]) -> String {
        let mut out = String::from("digraph bn {\n");
        for (i, name) in names.iter().enumerate().take(self.n()) {
            let _ = writeln!(out, "  n{i} [label=\"{}\"];", escape_dot(name));
        }
        for (from, to) in self.edges() {
            let _ = writeln!(out, "  n{from} -> n{to};");
        }
        out.push_str("}\n");
        out
    }
}

fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn validate_examples() {
        let g = validate_dag(vec![vec![], vec![0]]).unwrap();
        assert_eq!(g.topological_order(), &[0, 1]);
        assert_eq!(g.children(0), &[1]);

        let err = validate_dag(vec![vec![1], vec![0]]).unwrap_err();
        match err {
            Error::Cycle(c) => {
                let mut c = c;
                c.sort();
                assert_eq!(c, vec![0, 1]);
            }
            other => panic!("{other:?}"),
        }
        assert!(validate_dag(vec![vec![]; 3]).is_ok());
    }

    #[test]
    fn reported_cycle_follows_edges() {
        // 0 -> 1 -> 2 -> 0, plus 3 hanging off the cycle
        let err = validate_dag(vec![vec![2], vec![0], vec![1], vec![2]]).unwrap_err();
        let Error::Cycle(c) = err else { panic!() };
        assert_eq!(c.len(), 3);
        let g_parents = [vec![2], vec![0], vec![1]];
        for k in 0..c.len() {
            let (from, to) = (c[k], c[(k + 1) % c.len()]);
            assert!(g_parents[to].contains(&from), "{c:?}");
        }
    }

    #[test]
    fn rejects_self_loops_and_bad_indices() {
        assert!(validate_dag(vec![vec![0]]).is_err());
        assert!(validate_dag(vec![vec![5], vec![]]).is_err());
    }

    #[test]
    fn markov_blanket_examples() {
        let chain = DagStructure::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(chain.markov_blanket(1), set(&[0, 2]));
        let collider = DagStructure::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        assert_eq!(collider.markov_blanket(0), set(&[1, 2]));
        let isolated = DagStructure::empty(2);
        assert!(isolated.markov_blanket(0).is_empty());
    }

    #[test]
    fn d_separation_examples() {
        let chain = DagStructure::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(chain.d_separated(0, 2, &[1]));
        assert!(!chain.d_separated(0, 2, &[]));

        let collider = DagStructure::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        assert!(collider.d_separated(0, 1, &[]));
        assert!(!collider.d_separated(0, 1, &[2]));

        // observing a descendant of the collider also opens it
        let desc = DagStructure::from_edges(4, &[(0, 2), (1, 2), (2, 3)]).unwrap();
        assert!(!desc.d_separated(0, 1, &[3]));

        let disconnected = DagStructure::empty(3);
        assert!(disconnected.d_separated(0, 1, &[]));
        assert!(disconnected.d_separated(0, 1, &[2]));
    }

    #[test]
    fn augment_matches_two_node_example() {
        let g = DagStructure::from_edges(2, &[(0, 1)]).unwrap();
        let a = g.augment();
        // X1 = 0, X2 = 1, Y1 = 2, Y2 = 3
        assert_eq!(a.edges(), vec![(2, 0), (2, 3), (3, 1)]);
        let single = DagStructure::empty(1).augment();
        assert_eq!(single.edges(), vec![(1, 0)]);
    }

    #[test]
    fn edits_keep_children_consistent() {
        let g = DagStructure::empty(3);
        let g = g.with_edge_added(0, 1).unwrap().with_edge_added(1, 2).unwrap();
        assert!(g.with_edge_added(2, 0).is_err());
        let r = g.with_edge_reversed(0, 1).unwrap();
        assert_eq!(r.children(1), &[0, 2]);
        assert!(r.children(0).is_empty());
        let d = r.with_edge_removed(1, 2).unwrap();
        assert!(d.children(1) == [0]);
        assert!(d.parents(2).is_empty());
        assert!(g.has_path(0, 2));
        assert!(!g.has_path(2, 0));
    }

    #[test]
    fn separable_within_discrete_separator() {
        // X0 -> D1 -> X2
        let g = DagStructure::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(g.separable_within(0, 2, &[false, true, false]));
        assert!(!g.separable_within(0, 2, &[false, false, false]));
    }

    #[test]
    fn dot_export_lists_edges() {
        let g = DagStructure::from_edges(2, &[(0, 1)]).unwrap();
        let dot = g.to_dot(&["a".into(), "b\"q".into()]);
        assert!(dot.contains("n0 -> n1;"));
        assert!(dot.contains("label=\"b\\\"q\""));
    }
}
