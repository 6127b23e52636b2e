//! Special functions backing the reference CDFs.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::{beta, gamma};

use super::StatError;

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64, StatError> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(StatError::Domain(format!("log_gamma({x})")));
    }
    Ok(gamma::ln_gamma(x))
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64, StatError> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) || !(0.0..=1.0).contains(&x) {
        return Err(StatError::Domain(format!("I_{x}({a}, {b})")));
    }
    beta::checked_beta_reg(a, b, x)
        .map(|v| v.clamp(0.0, 1.0))
        .map_err(|e| StatError::Domain(format!("I_{x}({a}, {b}): {e}")))
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn regularized_lower_gamma(a: f64, x: f64) -> Result<f64, StatError> {
    if !(a > 0.0 && a.is_finite()) || x.is_nan() || x < 0.0 {
        return Err(StatError::Domain(format!("P({a}, {x})")));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    gamma::checked_gamma_lr(a, x).map_err(|e| StatError::Domain(format!("P({a}, {x}): {e}")))
}

fn chi_square(df: f64) -> Result<ChiSquared, StatError> {
    ChiSquared::new(df).map_err(|e| StatError::Domain(format!("chi-square df={df}: {e}")))
}

pub fn chi_square_cdf(df: f64, x: f64) -> Result<f64, StatError> {
    Ok(chi_square(df)?.cdf(x.max(0.0)))
}

pub fn chi_square_quantile(df: f64, p: f64) -> Result<f64, StatError> {
    if !(0.0..1.0).contains(&p) {
        return Err(StatError::Domain(format!("chi-square quantile df={df} p={p}")));
    }
    Ok(chi_square(df)?.inverse_cdf(p))
}

/// `ln Σ_i exp(x_i)`, stable for very negative entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_nan() {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    use std::f64::consts::PI;

    #[test]
    fn log_gamma_factorials() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-15);
        assert!(log_gamma(2.0).unwrap().abs() < 1e-15);
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-13);
        assert!((log_gamma(0.5).unwrap() - PI.sqrt().ln()).abs() < 1e-14);
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.0).is_err());
    }

    #[test]
    fn log_gamma_recurrence() {
        let mut x = 0.1;
        while x <= 50.0 {
            let lhs = log_gamma(x + 1.0).unwrap();
            let rhs = log_gamma(x).unwrap() + x.ln();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "x={x}");
            x += 0.137;
        }
    }

    #[test]
    fn incomplete_beta_uniform() {
        for x in [0.0, 0.25, 0.5, 1.0] {
            assert!((regularized_incomplete_beta(1.0, 1.0, x).unwrap() - x).abs() < 1e-14);
        }
    }

    #[test]
    fn incomplete_beta_polynomial_case() {
        // Beta(2,3) density 12 t (1-t)^2 integrates to 12(x²/2 − 2x³/3 + x⁴/4)
        let oracle = |x: f64| 12.0 * (x * x / 2.0 - 2.0 * x.powi(3) / 3.0 + x.powi(4) / 4.0);
        assert!((oracle(0.5) - 0.6875).abs() < 1e-15);
        for x in [0.05, 0.3, 0.5, 0.77, 0.99] {
            let v = regularized_incomplete_beta(2.0, 3.0, x).unwrap();
            assert!((v - oracle(x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn incomplete_beta_symmetry() {
        for &a in &[0.01, 0.3, 1.0, 2.5, 17.0] {
            for &b in &[0.02, 0.5, 1.0, 4.0, 30.0] {
                for i in 0..=20 {
                    let x = i as f64 / 20.0;
                    let s = regularized_incomplete_beta(a, b, x).unwrap()
                        + regularized_incomplete_beta(b, a, 1.0 - x).unwrap();
                    assert!((s - 1.0).abs() < 1e-10, "a={a} b={b} x={x}");
                }
            }
        }
    }

    #[test]
    fn incomplete_beta_domain() {
        assert!(regularized_incomplete_beta(0.0, 1.0, 0.5).is_err());
        assert!(regularized_incomplete_beta(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn chi_square_known_quantiles() {
        // standard table values
        assert!((chi_square_quantile(1.0, 0.99).unwrap() - 6.634_896_601).abs() < 1e-6);
        assert!((chi_square_quantile(9.0, 0.99).unwrap() - 21.665_994_34).abs() < 1e-6);
        assert!((chi_square_quantile(81.0, 0.99).unwrap() - 113.512_2).abs() < 1e-3);
    }

    #[test]
    fn lower_gamma_exponential_case() {
        for x in [0.1, 1.0, 3.0, 10.0] {
            let v = regularized_lower_gamma(1.0, x).unwrap();
            assert!((v - (1.0 - (-x).exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn log_sum_exp_is_stable() {
        assert_eq!(log_sum_exp(&[-1e4, -1e4]), -1e4 + 2f64.ln());
        assert_eq!(log_sum_exp(&[0.0]), 0.0);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_add_exp(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_add_exp(-3.0, f64::NEG_INFINITY), -3.0);
    }
}
