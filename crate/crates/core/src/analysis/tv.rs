//! Discrete distributions with recorded truncation and their total-variation distance.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{positive, Error, Result};
use crate::special::{gamma_inc_reg, ln_factorial, ln_gamma};

/// Tolerance on `Σ masses + deficit = 1`.
const MASS_TOLERANCE: f64 = 1e-12;

/// Masses on an ordered support. Any unlisted mass (`deficit`) sits on
/// outcomes beyond the largest listed one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution<T> {
    support: Vec<T>,
    masses: Vec<f64>,
    total: f64,
    deficit: f64,
}

impl<T: Ord + Clone> DiscreteDistribution<T> {
    /// Complete distribution; masses must sum to one.
    pub fn new(support: Vec<T>, masses: Vec<f64>) -> Result<Self> {
        Self::truncated(support, masses, 0.0)
    }

    /// Distribution whose listed masses miss `deficit` of the total.
    pub fn truncated(support: Vec<T>, masses: Vec<f64>, deficit: f64) -> Result<Self> {
        if support.len() != masses.len() {
            return Err(Error::Dimension(alloc::format!(
                "{} outcomes but {} masses",
                support.len(),
                masses.len()
            )));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain {
                what: "support",
                value: f64::NAN,
                reason: "must be strictly increasing",
            });
        }
        if let Some(&m) = masses.iter().find(|m| !(**m >= 0.0)) {
            return Err(Error::Domain {
                what: "mass",
                value: m,
                reason: "must be nonnegative",
            });
        }
        if !(deficit >= 0.0) {
            return Err(Error::Domain {
                what: "deficit",
                value: deficit,
                reason: "must be nonnegative",
            });
        }
        let total: f64 = masses.iter().sum();
        if (total + deficit - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Domain {
                what: "total mass",
                value: total + deficit,
                reason: "listed mass plus deficit must equal one",
            });
        }
        Ok(Self {
            support,
            masses,
            total,
            deficit,
        })
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Sum of the listed masses.
    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    pub fn is_complete(&self) -> bool {
        self.deficit == 0.0
    }

    pub fn mass_of(&self, outcome: &T) -> f64 {
        self.support
            .binary_search(outcome)
            .map_or(0.0, |i| self.masses[i])
    }
}

impl DiscreteDistribution<u64> {
    /// `Poisson(λ)` on `0..=x_max`, with `x_max` the first cutoff whose tail
    /// majorant `exp(-x²/(2(λ+x)))` falls below `max_deficit`.
    pub fn poisson(lambda: f64, max_deficit: f64) -> Result<Self> {
        Self::poisson_through(lambda, max_deficit, 0)
    }

    /// As [`poisson`](Self::poisson), listing at least the outcomes `0..=min_last`.
    pub fn poisson_through(lambda: f64, max_deficit: f64, min_last: u64) -> Result<Self> {
        positive("lambda", lambda)?;
        positive("max_deficit", max_deficit)?;
        // P(X ≥ λ + x) ≤ exp(-x²/(2(λ+x)))
        let mut x = 1.0f64;
        while poisson_tail_upper(lambda, x)? >= max_deficit {
            x *= 1.25;
        }
        let x_max = ((lambda + x).ceil() as u64).max(min_last);
        let masses: Vec<f64> = (0..=x_max)
            .map(|k| (k as f64 * lambda.ln() - lambda - ln_factorial(k)).exp())
            .collect();
        // P(X > x_max) = P(x_max + 1, λ), the regularized lower incomplete gamma
        let deficit = gamma_inc_reg(x_max as f64 + 1.0, lambda);
        Self::truncated((0..=x_max).collect(), masses, deficit)
    }

    /// `Binomial(n, p)`, complete.
    pub fn binomial(n: u64, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain {
                what: "p",
                value: p,
                reason: "must lie in [0, 1]",
            });
        }
        let nf = n as f64;
        let masses: Vec<f64> = (0..=n)
            .map(|k| {
                let kf = k as f64;
                let ln_choose = ln_gamma(nf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0);
                let a = if k == 0 { 0.0 } else { kf * p.ln() };
                let b = if k == n { 0.0 } else { (nf - kf) * (-p).ln_1p() };
                (ln_choose + a + b).exp()
            })
            .collect();
        let total: f64 = masses.iter().sum();
        let masses = masses.into_iter().map(|m| m / total).collect();
        Self::new((0..=n).collect(), masses)
    }
}

/// Total-variation distance with its truncation uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalVariation {
    /// Half the L1 distance on the listed outcomes plus half of each deficit.
    pub value: f64,
    /// Smallest distance consistent with the truncations.
    pub lower: f64,
}

impl TotalVariation {
    /// Largest distance consistent with the truncations; equals `value`.
    pub fn upper(&self) -> f64 {
        self.value
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.value
    }
}

/// Total-variation distance `sup_A |P(A) - Q(A)|`.
///
/// Exact when neither side is truncated, or when one side is complete and the
/// other's deficit lies beyond every outcome the complete side lists.
pub fn tv_exact<T: Ord + Clone>(p: &DiscreteDistribution<T>, q: &DiscreteDistribution<T>) -> TotalVariation {
    let (mut i, mut j) = (0, 0);
    let mut l1 = 0.0;
    while i < p.support.len() || j < q.support.len() {
        let ord = match (p.support.get(i), q.support.get(j)) {
            (Some(a), Some(b)) => a.cmp(b),
            (Some(_), None) => core::cmp::Ordering::Less,
            _ => core::cmp::Ordering::Greater,
        };
        match ord {
            core::cmp::Ordering::Less => {
                l1 += p.masses[i];
                i += 1;
            }
            core::cmp::Ordering::Greater => {
                l1 += q.masses[j];
                j += 1;
            }
            core::cmp::Ordering::Equal => {
                l1 += (p.masses[i] - q.masses[j]).abs();
                i += 1;
                j += 1;
            }
        }
    }
    let listed = 0.5 * l1;
    let (dp, dq) = (p.deficit, q.deficit);
    let value = (listed + 0.5 * (dp + dq)).min(1.0);
    let beyond = |a: &DiscreteDistribution<T>, b: &DiscreteDistribution<T>| match (a.support.last(), b.support.last()) {
        (Some(x), Some(y)) => x >= y,
        (_, None) => true,
        (None, Some(_)) => false,
    };
    let lower = if dq == 0.0 && beyond(p, q) || dp == 0.0 && beyond(q, p) {
        value
    } else if beyond(p, q) && beyond(q, p) {
        // both deficits sit past the common last outcome
        listed + 0.5 * (dp - dq).abs()
    } else {
        (listed - 0.5 * (dp + dq)).max(0.0)
    };
    TotalVariation {
        value,
        lower: lower.min(value),
    }
}

/// `d_TV(Poisson(γ), Binomial(K, q))` with `q = (γ/K)/(1 + γ/K)`; exact.
pub fn tv_binom_poisson(k: u64, gamma: f64) -> Result<TotalVariation> {
    positive("gamma", gamma)?;
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "K",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let r = gamma / k as f64;
    let q = r / (1.0 + r);
    let b = DiscreteDistribution::binomial(k, q)?;
    let p = DiscreteDistribution::poisson_through(gamma, 1e-13, k)?;
    Ok(tv_exact(&p, &b))
}

/// `P(X ≥ λ + x) ≤ exp(-x²/(2(λ+x)))` for `X ~ Poisson(λ)`.
pub fn poisson_tail_upper(lambda: f64, x: f64) -> Result<f64> {
    positive("lambda", lambda)?;
    positive("x", x)?;
    Ok((-x * x / (2.0 * (lambda + x))).exp())
}

/// `P(X ≤ λ - x) ≤ exp(-x²/(2λ))` for `X ~ Poisson(λ)`.
pub fn poisson_tail_lower(lambda: f64, x: f64) -> Result<f64> {
    positive("lambda", lambda)?;
    positive("x", x)?;
    Ok((-x * x / (2.0 * lambda)).exp())
}
