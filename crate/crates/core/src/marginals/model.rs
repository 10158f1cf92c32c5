//! Exponential-family CRM–likelihood pairs with zero discount.
//!
//! Predictive laws are indexed by the round `n` (one plus the history length)
//! and the history total `A = Σ x_i`. Target predictives use shape `A`;
//! approximate predictives use `A + ε` with `ε = c/K`.

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::measures::RateMeasureSpec;
use crate::special::{digamma, ln_beta, ln_factorial, ln_gamma, ln_nb_coefficient};

/// Which conjugate pair a model is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    BetaBernoulli,
    GammaPoisson,
    BetaNegativeBinomial,
}

/// A CRM with zero discount paired with its conjugate count likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct ExpFamilyModel {
    family: ModelFamily,
    spec: RateMeasureSpec,
    /// Concentration `α` or rate `λ`.
    hyper: f64,
    /// Negative-binomial stopping parameter; 1 otherwise.
    r: f64,
}

impl ExpFamilyModel {
    pub fn beta_bernoulli(gamma: f64, alpha: f64) -> Result<Self> {
        Ok(Self {
            family: ModelFamily::BetaBernoulli,
            spec: RateMeasureSpec::beta_process(gamma, alpha, 0.0)?,
            hyper: alpha,
            r: 1.0,
        })
    }

    pub fn gamma_poisson(gamma: f64, rate: f64) -> Result<Self> {
        Ok(Self {
            family: ModelFamily::GammaPoisson,
            spec: RateMeasureSpec::gamma_process(gamma, rate, 0.0)?,
            hyper: rate,
            r: 1.0,
        })
    }

    /// Requires `α > 1`.
    pub fn beta_negative_binomial(gamma: f64, alpha: f64, r: f64) -> Result<Self> {
        positive("r", r)?;
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "beta-negative binomial needs alpha > 1",
            });
        }
        Ok(Self {
            family: ModelFamily::BetaNegativeBinomial,
            spec: RateMeasureSpec::beta_process(gamma, alpha, 0.0)?,
            hyper: alpha,
            r,
        })
    }

    pub fn family(&self) -> ModelFamily {
        self.family
    }

    pub fn spec(&self) -> &RateMeasureSpec {
        &self.spec
    }

    pub fn mass(&self) -> f64 {
        self.spec.mass()
    }

    /// `α` for the beta families, `λ` for gamma–Poisson.
    pub fn hyper(&self) -> f64 {
        self.hyper
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `c = γα` (beta) or `γλ` (gamma).
    pub fn scale(&self) -> f64 {
        self.mass() * self.hyper
    }

    /// Shape shift `c/K` carried by every approximate atom.
    pub fn shift(&self, k: usize) -> f64 {
        self.scale() / k as f64
    }

    /// Largest count the likelihood can produce.
    pub fn max_count(&self) -> Option<u64> {
        match self.family {
            ModelFamily::BetaBernoulli => Some(1),
            _ => None,
        }
    }

    /// `ln κ(x)`.
    pub fn ln_kappa(&self, x: u64) -> f64 {
        match self.family {
            ModelFamily::BetaBernoulli => 0.0,
            ModelFamily::GammaPoisson => -ln_factorial(x),
            ModelFamily::BetaNegativeBinomial => ln_nb_coefficient(x, self.r),
        }
    }

    /// Sufficient statistic paired with `ln θ`.
    pub fn phi(&self, x: u64) -> f64 {
        x as f64
    }

    /// Log-partition `A(θ)`.
    pub fn log_partition(&self, theta: f64) -> f64 {
        match self.family {
            ModelFamily::BetaBernoulli => -(-theta).ln_1p(),
            ModelFamily::GammaPoisson => theta,
            ModelFamily::BetaNegativeBinomial => -self.r * (-theta).ln_1p(),
        }
    }

    /// `μ(θ)`, paired with `t(x)`; Bernoulli carries `t(x) = -x`, the others vanish.
    pub fn natural_parameter(&self, theta: f64) -> f64 {
        match self.family {
            ModelFamily::BetaBernoulli => (-theta).ln_1p(),
            _ => 0.0,
        }
    }

    pub fn statistic(&self, x: u64) -> f64 {
        match self.family {
            ModelFamily::BetaBernoulli => -(x as f64),
            _ => 0.0,
        }
    }

    /// `ln ℓ(x | θ) = ln κ(x) + φ(x) ln θ + μ(θ) t(x) - A(θ)`.
    pub fn ln_likelihood(&self, x: u64, theta: f64) -> Result<f64> {
        self.check_count(x)?;
        self.spec.check_support(theta)?;
        if self.family == ModelFamily::BetaBernoulli && theta >= 1.0 {
            return Ok(if x == 1 { 0.0 } else { f64::NEG_INFINITY });
        }
        let ln_theta = if x == 0 { 0.0 } else { self.phi(x) * theta.ln() };
        Ok(self.ln_kappa(x) + ln_theta + self.natural_parameter(theta) * self.statistic(x)
            - self.log_partition(theta))
    }

    pub(crate) fn check_count(&self, x: u64) -> Result<()> {
        match self.max_count() {
            Some(m) if x > m => Err(Error::Domain {
                what: "count",
                value: x as f64,
                reason: "outside the likelihood's support",
            }),
            _ => Ok(()),
        }
    }

    /// Validates a history and returns `(n, A)`.
    pub fn summarize(&self, history: &[u64]) -> Result<(u64, u64)> {
        let mut total = 0u64;
        for &x in history {
            self.check_count(x)?;
            total += x;
        }
        Ok((history.len() as u64 + 1, total))
    }

    /// `ln h(x | ·)` for round `n` and history total `total ≥ 1`.
    pub fn target_ln_pmf(&self, n: u64, total: u64, x: u64) -> Result<f64> {
        if total == 0 {
            return Err(Error::Domain {
                what: "history",
                value: 0.0,
                reason: "target predictive needs an instantiated atom",
            });
        }
        self.check_round(n, total)?;
        Ok(self.ln_pmf_with_shape(n, total, total as f64, x))
    }

    /// `ln h̃(x | ·)` for round `n` and any history total.
    pub fn approx_ln_pmf(&self, k: usize, n: u64, total: u64, x: u64) -> Result<f64> {
        check_k(k)?;
        self.check_round(n, total)?;
        Ok(self.ln_pmf_with_shape(n, total, total as f64 + self.shift(k), x))
    }

    fn check_round(&self, n: u64, total: u64) -> Result<()> {
        if n == 0 {
            return Err(Error::Domain {
                what: "n",
                value: 0.0,
                reason: "rounds start at 1",
            });
        }
        if self.family == ModelFamily::BetaBernoulli && total > n - 1 {
            return Err(Error::Domain {
                what: "history total",
                value: total as f64,
                reason: "exceeds the number of Bernoulli observations",
            });
        }
        Ok(())
    }

    /// Predictive log-pmf for posterior shape `a` on `ln θ`.
    pub(crate) fn ln_pmf_with_shape(&self, n: u64, total: u64, a: f64, x: u64) -> f64 {
        let nf = n as f64;
        match self.family {
            ModelFamily::BetaBernoulli => {
                let fail = self.hyper - 1.0 + nf - total as f64;
                let denom = a + fail;
                match x {
                    0 => (fail / denom).ln(),
                    1 => (a / denom).ln(),
                    _ => f64::NEG_INFINITY,
                }
            }
            ModelFamily::GammaPoisson => {
                // NB(a, p) with p = 1/(λ+n)
                let q = self.hyper + nf;
                let xf = x as f64;
                ln_gamma(a + xf) - ln_gamma(a) - ln_factorial(x) - xf * q.ln()
                    + a * (-1.0 / q).ln_1p()
            }
            ModelFamily::BetaNegativeBinomial => {
                let b_now = self.r * nf + self.hyper;
                let b_prev = self.r * (nf - 1.0) + self.hyper;
                ln_nb_coefficient(x, self.r) + ln_beta(a + x as f64, b_now) - ln_beta(a, b_prev)
            }
        }
    }

    /// `ln M_{n,x}`.
    pub fn ln_new_atom_rate(&self, n: u64, x: u64) -> Result<f64> {
        if x == 0 {
            return Err(Error::Domain {
                what: "x",
                value: 0.0,
                reason: "new atoms have nonzero counts",
            });
        }
        if n == 0 {
            return Err(Error::Domain {
                what: "n",
                value: 0.0,
                reason: "rounds start at 1",
            });
        }
        Ok(self.ln_rate_unchecked(n, x))
    }

    pub(crate) fn ln_rate_unchecked(&self, n: u64, x: u64) -> f64 {
        let nf = n as f64;
        let c = self.scale().ln();
        match self.family {
            ModelFamily::BetaBernoulli => {
                if x == 1 {
                    c - (self.hyper - 1.0 + nf).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            ModelFamily::GammaPoisson => {
                let xf = x as f64;
                c - xf.ln() - xf * (self.hyper + nf).ln()
            }
            ModelFamily::BetaNegativeBinomial => {
                c + ln_nb_coefficient(x, self.r) + ln_beta(x as f64, self.r * nf + self.hyper)
            }
        }
    }

    /// `Σ_{x≥1} M_{n,x}` in closed form.
    pub fn total_new_atom_rate(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::Domain {
                what: "n",
                value: 0.0,
                reason: "rounds start at 1",
            });
        }
        let nf = n as f64;
        let c = self.scale();
        Ok(match self.family {
            ModelFamily::BetaBernoulli => c / (self.hyper - 1.0 + nf),
            ModelFamily::GammaPoisson => -c * (-1.0 / (self.hyper + nf)).ln_1p(),
            ModelFamily::BetaNegativeBinomial => {
                let b = self.r * nf + self.hyper;
                c * (digamma(b) - digamma(b - self.r))
            }
        })
    }

    /// `Σ_{n=1}^{N} Σ_x M_{n,x}`, the expected number of target atoms after `N` rounds.
    pub fn expected_atoms(&self, rounds: u64) -> f64 {
        (1..=rounds)
            .map(|n| self.total_new_atom_rate(n).expect("n >= 1"))
            .sum()
    }

    /// `ln h̃(0 | 0)` at round `n`.
    pub fn approx_ln_dormant(&self, k: usize, n: u64) -> Result<f64> {
        self.approx_ln_pmf(k, n, 0, 0)
    }

    /// `1 - h̃(0 | 0)`.
    pub fn approx_activation(&self, k: usize, n: u64) -> Result<f64> {
        Ok(-self.approx_ln_dormant(k, n)?.exp_m1())
    }

    /// Draw from the target predictive.
    pub fn sample_target<R: Rng + ?Sized>(&self, rng: &mut R, n: u64, total: u64) -> Result<u64> {
        self.target_ln_pmf(n, total, 0)?;
        let a = total as f64;
        Ok(invert(rng, 0, 1.0, |x| self.ln_pmf_with_shape(n, total, a, x)))
    }

    /// Draw from the approximate predictive.
    pub fn sample_approx<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        k: usize,
        n: u64,
        total: u64,
    ) -> Result<u64> {
        self.approx_ln_pmf(k, n, total, 0)?;
        let a = total as f64 + self.shift(k);
        Ok(invert(rng, 0, 1.0, |x| self.ln_pmf_with_shape(n, total, a, x)))
    }

    /// Draw from `h̃(x | 0)` conditioned on `x ≥ 1`.
    pub fn sample_approx_activated<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        k: usize,
        n: u64,
    ) -> Result<u64> {
        let mass = self.approx_activation(k, n)?;
        let a = self.shift(k);
        Ok(invert(rng, 1, mass, |x| self.ln_pmf_with_shape(n, 0, a, x)))
    }

    /// Size of one new target atom, drawn from `M_{n,·}/Σ M_{n,·}`.
    pub fn sample_new_atom_size<R: Rng + ?Sized>(&self, rng: &mut R, n: u64) -> Result<u64> {
        let total = self.total_new_atom_rate(n)?;
        Ok(invert(rng, 1, total, |x| self.ln_rate_unchecked(n, x)))
    }
}

/// Sequential inversion of a nonnegative sequence with known total,
/// neglecting at most `1e-12` of the total at the far end.
fn invert<R: Rng + ?Sized, F: Fn(u64) -> f64>(rng: &mut R, start: u64, total: f64, ln_term: F) -> u64 {
    let target = rng.random::<f64>() * total;
    let mut cum = 0.0;
    let mut x = start;
    loop {
        cum += ln_term(x).exp();
        if cum > target || total - cum <= 1e-12 * total {
            return x;
        }
        x += 1;
    }
}

pub(crate) fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "K",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    Ok(())
}

/// `h(x | x_{1:(n-1)})` for the target process; `n` is one plus the history length.
pub fn target_predictive_pmf(model: &ExpFamilyModel, history: &[u64], x: u64) -> Result<f64> {
    let (n, total) = model.summarize(history)?;
    model.check_count(x)?;
    model.target_ln_pmf(n, total, x).map(f64::exp)
}

/// `h̃(x | x_{1:(n-1)})` for the approximation with `K` atoms.
pub fn approx_predictive_pmf(
    model: &ExpFamilyModel,
    k: usize,
    history: &[u64],
    x: u64,
) -> Result<f64> {
    let (n, total) = model.summarize(history)?;
    model.check_count(x)?;
    model.approx_ln_pmf(k, n, total, x).map(f64::exp)
}

/// `M_{n,x}`.
pub fn target_new_atom_rate(model: &ExpFamilyModel, n: u64, x: u64) -> Result<f64> {
    model.ln_new_atom_rate(n, x).map(f64::exp)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    family: ModelFamily,
    gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
}

impl TryFrom<RawModel> for ExpFamilyModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let need = |v: Option<f64>, name: &'static str| {
            v.ok_or(Error::InvalidParameter {
                name,
                value: f64::NAN,
                reason: "required for this family",
            })
        };
        let reject = |v: Option<f64>, name: &'static str| match v {
            Some(value) => Err(Error::InvalidParameter {
                name,
                value,
                reason: "not a parameter of this family",
            }),
            None => Ok(()),
        };
        match raw.family {
            ModelFamily::BetaBernoulli => {
                reject(raw.rate, "rate")?;
                reject(raw.r, "r")?;
                Self::beta_bernoulli(raw.gamma, need(raw.alpha, "alpha")?)
            }
            ModelFamily::GammaPoisson => {
                reject(raw.alpha, "alpha")?;
                reject(raw.r, "r")?;
                Self::gamma_poisson(raw.gamma, need(raw.rate, "rate")?)
            }
            ModelFamily::BetaNegativeBinomial => {
                reject(raw.rate, "rate")?;
                Self::beta_negative_binomial(
                    raw.gamma,
                    need(raw.alpha, "alpha")?,
                    need(raw.r, "r")?,
                )
            }
        }
    }
}

impl From<ExpFamilyModel> for RawModel {
    fn from(m: ExpFamilyModel) -> Self {
        let mut raw = RawModel {
            family: m.family,
            gamma: m.mass(),
            alpha: None,
            rate: None,
            r: None,
        };
        match m.family {
            ModelFamily::BetaBernoulli => raw.alpha = Some(m.hyper),
            ModelFamily::GammaPoisson => raw.rate = Some(m.hyper),
            ModelFamily::BetaNegativeBinomial => {
                raw.alpha = Some(m.hyper);
                raw.r = Some(m.r);
            }
        }
        raw
    }
}
