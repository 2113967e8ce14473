//! Sufficient statistics of a family (child plus ordered parents) and the
//! Dirichlet-multinomial log marginal likelihood over them.

use crate::dataset::DiscreteData;

use super::gamma::ln_gamma_unchecked;
use super::DirichletMode;

/// `N_ijk` for one family, stored row-major: `counts[j * r + k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyCounts {
    pub r: usize,
    pub q: usize,
    pub counts: Vec<u64>,
    pub margins: Vec<u64>,
}

impl FamilyCounts {
    pub fn cell(&self, j: usize, k: usize) -> u64 {
        self.counts[j * self.r + k]
    }

    pub fn total(&self) -> u64 {
        self.margins.iter().sum()
    }

    /// Element-wise sum of two tables over the same family.
    pub fn merge(mut self, other: &FamilyCounts) -> FamilyCounts {
        assert_eq!((self.r, self.q), (other.r, other.q));
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.margins.iter_mut().zip(&other.margins) {
            *a += b;
        }
        self
    }
}

/// Mixed-radix index of a parent configuration; the first parent is the most
/// significant digit.
pub fn config_index(codes: &[usize], arities: &[usize]) -> usize {
    codes
        .iter()
        .zip(arities)
        .fold(0, |acc, (&c, &a)| acc * a + c)
}

/// Tallies `N_ijk` for `child` given `parents` over all rows of `data`.
pub fn family_counts(data: &DiscreteData, child: usize, parents: &[usize]) -> FamilyCounts {
    family_counts_rows(data, child, parents, 0..data.n_rows())
}

pub(crate) fn family_counts_rows(
    data: &DiscreteData,
    child: usize,
    parents: &[usize],
    rows: std::ops::Range<usize>,
) -> FamilyCounts {
    let r = data.arity(child);
    let q: usize = parents.iter().map(|&p| data.arity(p)).product();
    let mut counts = vec![0u64; q * r];
    let mut margins = vec![0u64; q];
    let child_col = data.column(child);
    let parent_cols: Vec<(&[usize], usize)> =
        parents.iter().map(|&p| (data.column(p), data.arity(p))).collect();
    for row in rows {
        let j = parent_cols
            .iter()
            .fold(0, |acc, (col, a)| acc * a + col[row]);
        counts[j * r + child_col[row]] += 1;
        margins[j] += 1;
    }
    FamilyCounts {
        r,
        q,
        counts,
        margins,
    }
}

/// Log marginal likelihood of one family under the Dirichlet scheme:
/// Σ_j [lnΓ(α_ij) − lnΓ(α_ij + N_ij) + Σ_k (lnΓ(α_ijk + N_ijk) − lnΓ(α_ijk))].
pub fn discrete_family_score(counts: &FamilyCounts, dirichlet: &DirichletMode) -> f64 {
    let cell = dirichlet.cell(counts.r, counts.q);
    let row = cell * counts.r as f64;
    let ln_cell = ln_gamma_unchecked(cell);
    let ln_row = ln_gamma_unchecked(row);
    let mut total = 0.0;
    for j in 0..counts.q {
        let nj = counts.margins[j];
        if nj == 0 {
            continue;
        }
        total += ln_row - ln_gamma_unchecked(row + nj as f64);
        for &n in &counts.counts[j * counts.r..(j + 1) * counts.r] {
            if n > 0 {
                total += ln_gamma_unchecked(cell + n as f64) - ln_cell;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(cols: Vec<Vec<usize>>, arities: Vec<usize>) -> DiscreteData {
        DiscreteData::new(cols, arities)
    }

    #[test]
    fn tally_examples() {
        let d = data(vec![vec![0, 0, 1]], vec![2]);
        let c = family_counts(&d, 0, &[]);
        assert_eq!(c.q, 1);
        assert_eq!(c.counts, vec![2, 1]);
        assert_eq!(c.margins, vec![3]);

        let d = data(vec![vec![0, 0, 1, 1], vec![0, 1, 1, 1]], vec![2, 2]);
        let c = family_counts(&d, 1, &[0]);
        assert_eq!(c.counts, vec![1, 1, 0, 2]);
        assert_eq!(c.margins, vec![2, 2]);
    }

    #[test]
    fn mixed_radix_order() {
        // parents (a: arity 2, b: arity 3) -> j = a * 3 + b
        assert_eq!(config_index(&[1, 2], &[2, 3]), 5);
        assert_eq!(config_index(&[0, 1], &[2, 3]), 1);
        let d = data(vec![vec![1], vec![2], vec![0]], vec![2, 3, 2]);
        let c = family_counts(&d, 2, &[0, 1]);
        assert_eq!(c.q, 6);
        assert_eq!(c.cell(5, 0), 1);
    }

    #[test]
    fn hand_example_is_one_twelfth() {
        let d = data(vec![vec![0, 0, 1]], vec![2]);
        let s = discrete_family_score(&family_counts(&d, 0, &[]), &DirichletMode::K2 { alpha: 1.0 });
        assert!((s - (1.0f64 / 12.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn single_observation_is_one_half() {
        let d = data(vec![vec![1]], vec![2]);
        let s = discrete_family_score(&family_counts(&d, 0, &[]), &DirichletMode::K2 { alpha: 1.0 });
        assert!((s - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_value_child_scores_zero() {
        let d = data(vec![vec![0; 17], [0, 1].repeat(9)[..17].to_vec()], vec![1, 2]);
        for mode in [DirichletMode::K2 { alpha: 1.0 }, DirichletMode::BDeu { ess: 3.0 }] {
            assert_eq!(discrete_family_score(&family_counts(&d, 0, &[]), &mode), 0.0);
            assert_eq!(discrete_family_score(&family_counts(&d, 0, &[1]), &mode), 0.0);
        }
    }

    #[test]
    fn merge_is_addition() {
        let d = data(vec![vec![0, 1, 1, 0, 1], vec![1, 1, 0, 0, 1]], vec![2, 2]);
        let whole = family_counts(&d, 0, &[1]);
        let a = family_counts_rows(&d, 0, &[1], 0..2);
        let b = family_counts_rows(&d, 0, &[1], 2..5);
        assert_eq!(a.merge(&b), whole);
    }
}
