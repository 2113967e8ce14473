use crate::error::{Error, Result};

/// Natural log of Γ(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(ln_gamma_unchecked(x))
    } else {
        Err(Error::Domain(x))
    }
}

/// Hot-path variant for callers that guarantee `x > 0`.
#[inline]
pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    // the Lanczos sum is off by a few ulps at the two roots
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    statrs::function::gamma::ln_gamma(x)
}

/// ln C(n, k).
pub(crate) fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_gamma_unchecked(n as f64 + 1.0)
        - ln_gamma_unchecked(k as f64 + 1.0)
        - ln_gamma_unchecked((n - k) as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_factorial(n: u64) -> f64 {
        (1..=n).map(|k| (k as f64).ln()).sum()
    }

    /// Γ(1/2) = 2 ∫_0^∞ e^{-u²} du, integrated by composite Simpson on [0, 9].
    fn gamma_half_by_quadrature() -> f64 {
        let (a, b, n) = (0.0f64, 9.0f64, 200_000usize);
        let h = (b - a) / n as f64;
        let f = |u: f64| (-u * u).exp();
        let mut s = f(a) + f(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + k as f64 * h);
        }
        2.0 * s * h / 3.0
    }

    #[test]
    fn factorial_identity() {
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-14);
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        for n in [10u64, 50, 170] {
            let expect = ln_factorial(n);
            let got = log_gamma(n as f64 + 1.0).unwrap();
            assert!(((got - expect) / expect).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn half_matches_closed_form_and_quadrature() {
        let closed = 0.5 * std::f64::consts::PI.ln();
        let quad = gamma_half_by_quadrature().ln();
        assert!((closed - quad).abs() < 1e-10);
        let got = log_gamma(0.5).unwrap();
        assert!(((got - closed) / closed).abs() < 1e-12);
    }

    #[test]
    fn large_arguments_follow_recurrence() {
        // lnΓ(x + 1) = lnΓ(x) + ln x
        for x in [123.25, 4567.5, 98_765.125, 999_999.5] {
            let lhs = log_gamma(x + 1.0).unwrap();
            let rhs = log_gamma(x).unwrap() + f64::ln(x);
            assert!(((lhs - rhs) / lhs).abs() < 1e-12, "x={x}");
        }
        // Stirling series with three correction terms
        let x = 1.0e6f64;
        let stirling = (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
            + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x.powi(3));
        let got = log_gamma(x).unwrap();
        assert!(((got - stirling) / stirling).abs() < 1e-13);
    }

    #[test]
    fn domain_errors() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
    }

    #[test]
    fn binomial() {
        assert!((ln_binomial(4, 1) - 4f64.ln()).abs() < 1e-12);
        assert!((ln_binomial(10, 3) - 120f64.ln()).abs() < 1e-12);
        assert!(ln_binomial(7, 0).abs() < 1e-12);
    }
}
