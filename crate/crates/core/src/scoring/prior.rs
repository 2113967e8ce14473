use crate::error::{Error, Result};

use super::gamma::{ln_binomial, ln_gamma_unchecked};
use super::PolicyPrior;

/// Log prior of a threshold policy with `arity` intervals chosen from
/// `candidates` thresholds on a column of `n_rows` cases.
///
/// Uniform mode gives every policy log-prior 0. Poisson mode puts a Poisson
/// mass on the interval count restricted to `2..=n_rows - 1`, then spreads it
/// uniformly over the `C(candidates, arity - 1)` threshold subsets of that
/// size. Counts outside the support get `-inf`.
pub fn policy_log_prior(
    arity: usize,
    candidates: usize,
    n_rows: usize,
    prior: &PolicyPrior,
) -> Result<f64> {
    if arity == 0 || arity - 1 > candidates {
        return Err(Error::InfeasiblePolicy {
            intervals: arity,
            needed: arity.saturating_sub(1),
            available: candidates,
        });
    }
    match *prior {
        PolicyPrior::Uniform => Ok(0.0),
        PolicyPrior::PoissonOverR { lambda } => {
            let top = n_rows.saturating_sub(1);
            if arity < 2 || arity > top {
                return Ok(f64::NEG_INFINITY);
            }
            let log_mass = |r: usize| r as f64 * lambda.ln() - lambda - ln_gamma_unchecked(r as f64 + 1.0);
            let log_z = log_sum_exp((2..=top).map(log_mass));
            Ok(log_mass(arity) - log_z - ln_binomial(candidates, arity - 1))
        }
    }
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_zero() {
        for r in 1..=5 {
            assert_eq!(policy_log_prior(r, 4, 10, &PolicyPrior::Uniform).unwrap(), 0.0);
        }
    }

    #[test]
    fn truncated_poisson_example() {
        // lambda = 2, six cases -> support r in 2..=5, four candidates
        let mass = |r: i32| (-2f64).exp() * 2f64.powi(r) / (1..=r).product::<i32>() as f64;
        let z: f64 = (2..=5).map(mass).sum();
        let expect = (mass(2) / z).ln() - 4f64.ln();
        let got = policy_log_prior(2, 4, 6, &PolicyPrior::PoissonOverR { lambda: 2.0 }).unwrap();
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn poisson_mass_sums_to_one_over_policies() {
        // summing exp(prior) over every threshold subset of every size gives 1
        let prior = PolicyPrior::PoissonOverR { lambda: 3.0 };
        let (m, n) = (6usize, 8usize);
        let mut total = 0.0;
        for r in 1..=m + 1 {
            let lp = policy_log_prior(r, m, n, &prior).unwrap();
            let subsets = (1..r).fold(1.0, |acc, k| acc * (m - k + 1) as f64 / k as f64);
            total += subsets * lp.exp();
        }
        assert!((total - 1.0).abs() < 1e-12, "{total}");
    }

    #[test]
    fn infeasible_arity() {
        let err = policy_log_prior(6, 4, 10, &PolicyPrior::Uniform).unwrap_err();
        assert!(matches!(err, Error::InfeasiblePolicy { .. }));
    }

    #[test]
    fn outside_support_has_zero_mass() {
        let p = PolicyPrior::PoissonOverR { lambda: 2.0 };
        assert_eq!(policy_log_prior(1, 4, 6, &p).unwrap(), f64::NEG_INFINITY);
    }
}
