//! Bayesian discretization and structure learning for mixed
//! continuous/discrete data.

// Negated float comparisons are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod generator;
pub mod graph;
pub mod io;
pub mod scoring;
pub mod search;

pub use error::{Error, Result};

pub use dataset::{
    load_dataset, ColumnData, Dataset, DiscreteData, DiscretizationPolicy, IntervalPolicy, NetworkPolicy, Schema,
    VariableKind, VariableMeta,
};
pub use generator::{random_mechanism, sample_dataset, Mechanism};
pub use graph::DagStructure;
pub use scoring::{
    local_score, network_score, DensityModel, DirichletMode, PolicyPrior, PriorSpec, ScoreBreakdown,
};
pub use search::{
    coordinate_ascent, hill_climb_structure, optimize_variable, InitSpec, LearnedNetwork, SearchConfig, SearchTrace,
};
