use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing value at row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },

    #[error("cannot parse `{token}` at row {row}, column `{column}`")]
    Parse {
        row: usize,
        column: String,
        token: String,
    },

    #[error("schema: {0}")]
    Schema(String),

    #[error("invalid data: {0}")]
    Validation(String),

    #[error("value {value} of `{column}` lies outside [{lower}, {upper}]")]
    OutOfRange {
        column: String,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid policy: {0}")]
    Policy(String),

    #[error("infeasible policy: {intervals} intervals need {needed} thresholds but only {available} candidates exist")]
    InfeasiblePolicy {
        intervals: usize,
        needed: usize,
        available: usize,
    },

    #[error("graph contains a cycle: {}", fmt_cycle(.0))]
    Cycle(Vec<usize>),

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("invalid prior: {0}")]
    Prior(String),

    #[error("log_gamma domain error: x = {0} must be positive")]
    Domain(f64),

    #[error("search refused: {0}")]
    Refused(String),

    #[error("invalid mechanism: {0}")]
    Mechanism(String),
}

fn fmt_cycle(nodes: &[usize]) -> String {
    let mut parts: Vec<String> = nodes.iter().map(|n| n.to_string()).collect();
    if let Some(first) = nodes.first() {
        parts.push(first.to_string());
    }
    parts.join(" -> ")
}
