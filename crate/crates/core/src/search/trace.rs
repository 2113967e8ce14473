use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeOp {
    Add,
    Delete,
    Reverse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceEvent {
    Policy {
        sweep: usize,
        variable: usize,
        old_arity: usize,
        new_arity: usize,
        delta: f64,
        total: f64,
    },
    Edge {
        op: EdgeOp,
        from: usize,
        to: usize,
        delta: f64,
        total: f64,
    },
}

impl TraceEvent {
    pub fn total(&self) -> f64 {
        match self {
            TraceEvent::Policy { total, .. } | TraceEvent::Edge { total, .. } => *total,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// A full pass gained less than epsilon.
    Converged,
    MaxSweeps,
    /// No continuous variable to discretize.
    NothingToOptimize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub initial_total: f64,
    /// Total after each coordinate-ascent sweep.
    pub sweep_totals: Vec<f64>,
    /// Accepted updates in order.
    pub events: Vec<TraceEvent>,
    pub termination: Termination,
}

impl SearchTrace {
    pub fn new(initial_total: f64) -> Self {
        SearchTrace {
            initial_total,
            sweep_totals: Vec::new(),
            events: Vec::new(),
            termination: Termination::Converged,
        }
    }

    pub fn final_total(&self) -> f64 {
        self.events.last().map_or(self.initial_total, TraceEvent::total)
    }

    /// Initial total followed by the total after every accepted update.
    pub fn totals(&self) -> Vec<f64> {
        std::iter::once(self.initial_total)
            .chain(self.events.iter().map(TraceEvent::total))
            .collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.totals().windows(2).all(|w| w[1] >= w[0])
            && self.sweep_totals.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn sweeps(&self) -> usize {
        self.sweep_totals.len()
    }

    /// One JSON object per accepted update.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
            out.push('\n');
        }
        out
    }

    pub(crate) fn absorb(&mut self, other: SearchTrace) {
        self.sweep_totals.extend(other.sweep_totals);
        self.events.extend(other.events);
        self.termination = other.termination;
    }
}
