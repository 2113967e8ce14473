//! Fixtures shared by the criterion benchmarks.

use bayesdisc::generator::{random_mechanism, sample_dataset};
use bayesdisc::{DagStructure, Dataset};

/// Synthetic data from a random latent network, with its true structure.
pub fn fixture(n_vars: usize, n_rows: usize, seed: u64) -> (Dataset, DagStructure) {
    let m = random_mechanism(n_vars, 2, 3, seed).expect("valid mechanism parameters");
    let (data, _) = sample_dataset(&m, n_rows).expect("n_rows > 0");
    (data, m.structure)
}
