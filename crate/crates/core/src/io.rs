//! JSON documents exchanged with the outside world: policies, structures
//! and score breakdowns. Every document carries `schema_version`.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dataset::{Dataset, DiscretizationPolicy, IntervalPolicy, NetworkPolicy};
use crate::error::{Error, Result};
use crate::graph::DagStructure;
use crate::scoring::ScoreBreakdown;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub thresholds: Vec<f64>,
    pub bounds: Option<[f64; 2]>,
    pub trivial: bool,
    #[serde(default)]
    pub arity: Option<usize>,
}

pub fn policy_to_json(policies: &NetworkPolicy, names: &[String]) -> Value {
    let mut vars = Map::new();
    for (name, p) in names.iter().zip(policies.iter()) {
        let entry = match p {
            DiscretizationPolicy::Trivial { arity } => PolicyEntry {
                thresholds: Vec::new(),
                bounds: None,
                trivial: true,
                arity: Some(*arity),
            },
            DiscretizationPolicy::Intervals(ip) => {
                let (lo, hi) = ip.bounds();
                PolicyEntry {
                    thresholds: ip.thresholds().to_vec(),
                    bounds: Some([lo, hi]),
                    trivial: false,
                    arity: Some(ip.arity()),
                }
            }
        };
        vars.insert(name.clone(), serde_json::to_value(entry).expect("policy entry serializes"));
    }
    serde_json::json!({ "schema_version": SCHEMA_VERSION, "variables": vars })
}

/// Reads a policy document and matches it to `data` by variable name.
pub fn policy_from_json(text: &str, data: &Dataset) -> Result<NetworkPolicy> {
    #[derive(Deserialize)]
    struct Doc {
        variables: std::collections::BTreeMap<String, PolicyEntry>,
    }
    let doc: Doc = serde_json::from_str(text)?;
    for name in doc.variables.keys() {
        if data.index_of(name).is_none() {
            return Err(Error::Schema(format!("policy names unknown variable `{name}`")));
        }
    }
    let mut out = NetworkPolicy::coarsest(data);
    for (i, meta) in data.variables().iter().enumerate() {
        let entry = doc
            .variables
            .get(&meta.name)
            .ok_or_else(|| Error::Schema(format!("policy has no entry for `{}`", meta.name)))?;
        let policy = if data.is_continuous(i) {
            if entry.trivial {
                return Err(Error::Policy(format!("continuous variable `{}` has a trivial policy", meta.name)));
            }
            let [lo, hi] = match entry.bounds {
                Some(b) => b,
                None => {
                    let (lo, hi) = data.continuous(i).expect("continuous").bounds();
                    [lo, hi]
                }
            };
            let p = IntervalPolicy::new(entry.thresholds.clone(), lo, hi)
                .map_err(|e| Error::Policy(format!("variable `{}`: {e}", meta.name)))?;
            DiscretizationPolicy::Intervals(p)
        } else {
            if !entry.trivial || !entry.thresholds.is_empty() {
                return Err(Error::Policy(format!("discrete variable `{}` needs a trivial policy", meta.name)));
            }
            let arity = entry.arity.unwrap_or(out.get(i).arity());
            DiscretizationPolicy::Trivial { arity }
        };
        if let Some(a) = entry.arity {
            if a != policy.arity() {
                return Err(Error::Policy(format!(
                    "variable `{}` declares arity {a} but its policy has {}",
                    meta.name,
                    policy.arity()
                )));
            }
        }
        out.set(i, policy);
    }
    out.check_against(data)?;
    Ok(out)
}

pub fn structure_to_json(structure: &DagStructure, names: &[String]) -> Value {
    let edges: Vec<[&str; 2]> = structure
        .edges()
        .into_iter()
        .map(|(a, b)| [names[a].as_str(), names[b].as_str()])
        .collect();
    serde_json::json!({ "schema_version": SCHEMA_VERSION, "variables": names, "edges": edges })
}

/// Reads `{ "edges": [[from, to], ..] }` with variable names, resolved
/// against `names`.
pub fn structure_from_json(text: &str, names: &[String]) -> Result<DagStructure> {
    #[derive(Deserialize)]
    struct Doc {
        edges: Vec<(String, String)>,
    }
    let doc: Doc = serde_json::from_str(text)?;
    let find = |n: &str| {
        names
            .iter()
            .position(|m| m == n)
            .ok_or_else(|| Error::Graph(format!("edge names unknown variable `{n}`")))
    };
    let mut edges = Vec::with_capacity(doc.edges.len());
    for (a, b) in &doc.edges {
        edges.push((find(a)?, find(b)?));
    }
    DagStructure::from_edges(names.len(), &edges)
}

pub fn breakdown_to_json(breakdown: &ScoreBreakdown, names: &[String]) -> Value {
    let nodes: Vec<Value> = breakdown
        .nodes
        .iter()
        .zip(names)
        .map(|(n, name)| {
            serde_json::json!({
                "name": name,
                "continuous": n.continuous,
                "discrete": n.discrete,
                "log_prior": n.log_prior,
                "total": n.sum(),
            })
        })
        .collect();
    serde_json::json!({ "schema_version": SCHEMA_VERSION, "total": breakdown.total, "nodes": nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnData, VariableMeta};

    fn data() -> Dataset {
        Dataset::from_columns(
            vec![VariableMeta::bounded("x", 0, 0.0, 4.0), VariableMeta::discrete("d", 1, 3)],
            vec![ColumnData::Continuous(vec![0.0, 1.0, 3.0]), ColumnData::Discrete(vec![0, 2, 1])],
        )
        .unwrap()
    }

    #[test]
    fn policy_round_trip() {
        let d = data();
        let mut p = NetworkPolicy::coarsest(&d);
        p.set(0, DiscretizationPolicy::Intervals(IntervalPolicy::new(vec![0.5, 2.0], 0.0, 4.0).unwrap()));
        let text = serde_json::to_string(&policy_to_json(&p, &d.names())).unwrap();
        assert!(text.contains("\"schema_version\":1"));
        assert_eq!(policy_from_json(&text, &d).unwrap(), p);
    }

    #[test]
    fn policy_arity_mismatch_names_variable() {
        let d = data();
        let text = r#"{"variables":{"x":{"thresholds":[],"bounds":[0,4],"trivial":false},
                       "d":{"thresholds":[],"bounds":null,"trivial":true,"arity":2}}}"#;
        let err = policy_from_json(text, &d).unwrap_err().to_string();
        assert!(err.contains('d'), "{err}");
    }

    #[test]
    fn structure_round_trip() {
        let names = vec!["a".to_string(), "b".into(), "c".into()];
        let g = DagStructure::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        let text = structure_to_json(&g, &names).to_string();
        assert_eq!(structure_from_json(&text, &names).unwrap(), g);
        assert!(structure_from_json(r#"{"edges":[["a","z"]]}"#, &names).is_err());
        assert!(structure_from_json(r#"{"edges":[["a","b"],["b","a"]]}"#, &names).is_err());
    }
}
