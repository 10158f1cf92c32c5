//! Closed-form error bounds and the growth function.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{positive, Error, Result};
use crate::special::digamma;

fn at_least_one(name: &'static str, v: u64) -> Result<f64> {
    if v == 0 {
        return Err(Error::InvalidParameter {
            name,
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    Ok(v as f64)
}

/// `C(N, α) = Σ_{n=1}^{N} α/(n-1+α)`, the expected number of clusters or features
/// per unit mass after `N` draws.
pub fn growth_function(n: u64, alpha: f64) -> Result<f64> {
    at_least_one("N", n)?;
    positive("alpha", alpha)?;
    Ok((1..=n).map(|i| alpha / (i as f64 - 1.0 + alpha)).sum())
}

/// `α(ln N - ψ(α) - 1)`, a lower bound on [`growth_function`].
pub fn growth_function_lower(n: u64, alpha: f64) -> Result<f64> {
    let nf = at_least_one("N", n)?;
    positive("alpha", alpha)?;
    Ok(alpha * (nf.ln() - digamma(alpha) - 1.0))
}

/// `Nγ (γα/(1+γα))^K`: truncation error of the Bondesson series of a beta process.
pub fn bondesson_tfa_bound(n: u64, k: u64, gamma: f64, alpha: f64) -> Result<f64> {
    let nf = at_least_one("N", n)?;
    positive("gamma", gamma)?;
    positive("alpha", alpha)?;
    let m = gamma * alpha;
    Ok(nf * gamma * (m / (1.0 + m)).powf(k as f64))
}

/// `2N exp(-(K-1)/α)`: truncation error of stick-breaking for a Dirichlet process.
pub fn tsb_dp_bound(n: u64, k: u64, alpha: f64) -> Result<f64> {
    let nf = at_least_one("N", n)?;
    let kf = at_least_one("K", k)?;
    positive("alpha", alpha)?;
    Ok(2.0 * nf * (-(kf - 1.0) / alpha).exp())
}

/// `(1/8) / (γ + e^{-1}(γ+1) max(12γ², 48γ, 28))`.
pub fn binom_poisson_lower_constant(gamma: f64) -> Result<f64> {
    positive("gamma", gamma)?;
    let m = (12.0 * gamma * gamma).max(48.0 * gamma).max(28.0);
    Ok(0.125 / (gamma + (-1.0f64).exp() * (gamma + 1.0) * m))
}

/// `n (Σ p_i)²` with `p_sum = Σ p_i`: multinomial-to-Poisson approximation error.
pub fn lecam_upper(n: u64, p_sum: f64) -> Result<f64> {
    if !(p_sum >= 0.0) {
        return Err(Error::Domain {
            what: "p_sum",
            value: p_sum,
            reason: "must be nonnegative",
        });
    }
    Ok(n as f64 * p_sum * p_sum)
}

fn check_chernoff(mu: f64, delta: f64) -> Result<()> {
    positive("mu", mu)?;
    positive("delta", delta)?;
    Ok(())
}

/// `P(X ≥ (1+δ)μ) ≤ exp(-δ²μ/(2+δ))` for sums of independent Bernoullis with mean `μ`.
pub fn chernoff_upper(mu: f64, delta: f64) -> Result<f64> {
    check_chernoff(mu, delta)?;
    Ok((-delta * delta * mu / (2.0 + delta)).exp())
}

/// `P(X ≤ (1-δ)μ) ≤ exp(-μδ²/2)`, `0 < δ < 1`.
pub fn chernoff_lower(mu: f64, delta: f64) -> Result<f64> {
    check_chernoff(mu, delta)?;
    if delta >= 1.0 {
        return Err(Error::Domain {
            what: "delta",
            value: delta,
            reason: "must lie in (0, 1)",
        });
    }
    Ok((-mu * delta * delta / 2.0).exp())
}

/// `α/((1+α)K)`: gap between the probabilities that two draws share an atom
/// under the finite symmetric Dirichlet and the Dirichlet process.
pub fn dp_fsd_two_sample_gap(alpha: f64, k: u64) -> Result<f64> {
    positive("alpha", alpha)?;
    let kf = at_least_one("K", k)?;
    Ok(alpha / ((1.0 + alpha) * kf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_values() {
        assert_eq!(bondesson_tfa_bound(1, 5, 1.0, 1.0).unwrap(), 0.03125);
        assert_eq!(tsb_dp_bound(1, 1, 1.0).unwrap(), 2.0);
        assert_eq!(growth_function(3, 1.0).unwrap(), 11.0 / 6.0);
        assert_eq!(dp_fsd_two_sample_gap(1.0, 10).unwrap(), 0.05);
        for a in [0.1, 1.0, 7.5] {
            assert_eq!(growth_function(1, a).unwrap(), 1.0);
        }
    }

    #[test]
    fn binom_poisson_constant_at_one() {
        // 1/(8(1 + 96/e))
        let hand = 1.0 / (8.0 * (1.0 + 96.0 / core::f64::consts::E));
        let c = binom_poisson_lower_constant(1.0).unwrap();
        assert!((c - hand).abs() < 1e-17);
        assert!((c - 0.0034419686).abs() < 1e-10);
    }

    #[test]
    fn growth_lower_holds() {
        for a in [0.3, 1.0, 4.0] {
            for n in [1u64, 5, 100, 10_000] {
                assert!(growth_function(n, a).unwrap() >= growth_function_lower(n, a).unwrap());
            }
        }
    }

    #[test]
    fn domains() {
        assert!(chernoff_lower(1.0, 1.5).is_err());
        assert!(tsb_dp_bound(0, 1, 1.0).is_err());
        assert!(lecam_upper(3, -0.1).is_err());
        assert!((lecam_upper(3, 0.1).unwrap() - 0.03).abs() < 1e-17);
        assert!(chernoff_upper(2.0, 1.0).unwrap() < 1.0);
    }
}
