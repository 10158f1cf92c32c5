//! Truncated series representations.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{positive, Error, Result};
use crate::rng::{ln_beta_variate, open01, poisson};

/// Bondesson series of a beta process with `α >= 1`, truncated at `K` terms:
/// `θ_k = V_k exp(-Γ_k/(γα))`, `V_k ~ Beta(1, α-1)`, `Γ_k` unit-rate arrival times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bondesson {
    pub gamma: f64,
    pub alpha: f64,
    pub k: usize,
}

impl Bondesson {
    pub fn new(gamma: f64, alpha: f64, k: usize) -> Result<Self> {
        positive("gamma", gamma)?;
        if !(alpha >= 1.0) || !alpha.is_finite() {
            return Err(Error::Unsupported(
                "Bondesson series requires concentration alpha >= 1",
            ));
        }
        Ok(Self { gamma, alpha, k })
    }

    /// Expected ratio of successive atom sizes, `γα/(1+γα)`.
    pub fn expected_ratio(&self) -> f64 {
        let m = self.gamma * self.alpha;
        m / (1.0 + m)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let scale = self.gamma * self.alpha;
        let mut arrival = 0.0;
        (0..self.k)
            .map(|_| {
                arrival -= open01(rng).ln();
                let ln_v = if self.alpha == 1.0 {
                    0.0
                } else {
                    ln_beta_variate(rng, 1.0, self.alpha - 1.0).0
                };
                (ln_v - arrival / scale).exp().max(f64::MIN_POSITIVE)
            })
            .collect()
    }
}

/// Stick-breaking series of a beta process over `K` rounds:
/// round `i` holds `Poisson(γ)` atoms of size `V^{(i)} Π_{l<i} (1 - V^{(l)})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaStickBreaking {
    pub gamma: f64,
    pub alpha: f64,
    pub rounds: usize,
}

impl BetaStickBreaking {
    pub fn new(gamma: f64, alpha: f64, rounds: usize) -> Result<Self> {
        positive("gamma", gamma)?;
        positive("alpha", alpha)?;
        Ok(Self {
            gamma,
            alpha,
            rounds,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::new();
        for round in 1..=self.rounds {
            let count = poisson(rng, self.gamma);
            for _ in 0..count {
                let mut ln_size = 0.0;
                for l in 1..=round {
                    let (ln_v, ln_1mv) = ln_beta_variate(rng, 1.0, self.alpha);
                    ln_size += if l == round { ln_v } else { ln_1mv };
                }
                out.push(ln_size.exp().max(f64::MIN_POSITIVE));
            }
        }
        out
    }
}

/// Truncated stick-breaking with `K` sticks and `v_K = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedStickBreaking {
    pub alpha: f64,
    pub k: usize,
}

impl TruncatedStickBreaking {
    pub fn new(alpha: f64, k: usize) -> Result<Self> {
        positive("alpha", alpha)?;
        if k == 0 {
            return Err(Error::InvalidParameter {
                name: "K",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(Self { alpha, k })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut remaining = 1.0f64;
        let mut out = Vec::with_capacity(self.k);
        for i in 0..self.k {
            if i + 1 == self.k {
                out.push(remaining.max(f64::MIN_POSITIVE));
            } else {
                let (ln_v, ln_1mv) = ln_beta_variate(rng, 1.0, self.alpha);
                out.push((remaining * ln_v.exp()).max(f64::MIN_POSITIVE));
                remaining *= ln_1mv.exp();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::split;

    #[test]
    fn tsb_single_stick() {
        let t = TruncatedStickBreaking::new(1.0, 1).unwrap();
        assert_eq!(t.sample(&mut split(1, 0)), alloc::vec![1.0]);
    }

    #[test]
    fn tsb_sums_to_one() {
        let t = TruncatedStickBreaking::new(0.7, 25).unwrap();
        let mut rng = split(1, 1);
        for _ in 0..100 {
            let w = t.sample(&mut rng);
            assert_eq!(w.len(), 25);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bondesson_requires_alpha_at_least_one() {
        assert!(matches!(
            Bondesson::new(1.0, 0.5, 5),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn bondesson_alpha_one_is_product_of_beta_gamma_one() {
        // τ_1 = p_1 ~ Beta(γ, 1): E = γ/(γ+1); τ_2 = p_1 p_2: E = (γ/(γ+1))^2
        let b = Bondesson::new(1.5, 1.0, 2).unwrap();
        let mut rng = split(2, 0);
        let n = 200_000;
        let draws: Vec<Vec<f64>> = (0..n).map(|_| b.sample(&mut rng)).collect();
        let r = 1.5 / 2.5;
        for (k, expect) in [(0usize, r), (1, r * r)] {
            let xs: Vec<f64> = draws.iter().map(|w| w[k]).collect();
            let m = crate::stats::mean(&xs);
            assert!((m - expect).abs() < 4.0 * crate::stats::standard_error(&xs));
        }
        // monotone within each draw
        assert!(draws.iter().all(|w| w[1] <= w[0]));
    }

    #[test]
    fn stick_breaking_count_is_poisson() {
        let s = BetaStickBreaking::new(2.0, 1.0, 3).unwrap();
        let mut rng = split(3, 0);
        let n = 50_000;
        let counts: Vec<f64> = (0..n).map(|_| s.sample(&mut rng).len() as f64).collect();
        let m = crate::stats::mean(&counts);
        assert!((m - 6.0).abs() < 4.0 * (6.0f64 / n as f64).sqrt());
    }
}
