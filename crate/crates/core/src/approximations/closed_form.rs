//! Named atom-size laws of the exponential-family approximations (`d = 0`).

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::measures::{FamilyParams, RateMeasureSpec};
use crate::rng::{beta_variate, ln_gamma_variate};
use crate::special::{ln_beta, ln_gamma};

/// A named univariate law on the positive reals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ClosedFormLaw {
    /// Density `θ^{a-1}(1-θ)^{b-1}/B(a,b)` on `(0, 1)`.
    Beta { a: f64, b: f64 },
    /// Density `λ^s θ^{s-1} e^{-λθ}/Γ(s)`.
    Gamma { shape: f64, rate: f64 },
    /// Density `θ^{a-1}(1+θ)^{-a-b}/B(a,b)`.
    BetaPrime { a: f64, b: f64 },
    /// Density `p θ^{s-1} exp(-(θ/scale)^p) / (scale^s Γ(s/p))`.
    GeneralizedGamma { scale: f64, shape: f64, power: f64 },
}

impl ClosedFormLaw {
    fn validate(self) -> Result<Self> {
        match self {
            ClosedFormLaw::Beta { a, b } | ClosedFormLaw::BetaPrime { a, b } => {
                positive("a", a)?;
                positive("b", b)?;
            }
            ClosedFormLaw::Gamma { shape, rate } => {
                positive("shape", shape)?;
                positive("rate", rate)?;
            }
            ClosedFormLaw::GeneralizedGamma {
                scale,
                shape,
                power,
            } => {
                positive("scale", scale)?;
                positive("shape", shape)?;
                positive("power", power)?;
            }
        }
        Ok(self)
    }

    /// Right end of the support.
    pub fn support_upper(&self) -> f64 {
        match self {
            ClosedFormLaw::Beta { .. } => 1.0,
            _ => f64::INFINITY,
        }
    }

    /// Log density; `-∞` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !(x > 0.0) || x > self.support_upper() {
            return f64::NEG_INFINITY;
        }
        match *self {
            ClosedFormLaw::Beta { a, b } => {
                (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)
            }
            ClosedFormLaw::Gamma { shape, rate } => {
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }
            ClosedFormLaw::BetaPrime { a, b } => {
                (a - 1.0) * x.ln() - (a + b) * x.ln_1p() - ln_beta(a, b)
            }
            ClosedFormLaw::GeneralizedGamma {
                scale,
                shape,
                power,
            } => {
                power.ln() + (shape - 1.0) * x.ln()
                    - (x / scale).powf(power)
                    - shape * scale.ln()
                    - ln_gamma(shape / power)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ClosedFormLaw::Beta { a, b } => a / (a + b),
            ClosedFormLaw::Gamma { shape, rate } => shape / rate,
            ClosedFormLaw::BetaPrime { a, b } => {
                if b > 1.0 {
                    a / (b - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            ClosedFormLaw::GeneralizedGamma {
                scale,
                shape,
                power,
            } => scale * (ln_gamma((shape + 1.0) / power) - ln_gamma(shape / power)).exp(),
        }
    }

    /// Log of one draw; exact even when the draw underflows.
    pub fn sample_ln<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ClosedFormLaw::Beta { a, b } => crate::rng::ln_beta_variate(rng, a, b).0,
            ClosedFormLaw::Gamma { shape, rate } => ln_gamma_variate(rng, shape) - rate.ln(),
            ClosedFormLaw::BetaPrime { a, b } => {
                ln_gamma_variate(rng, a) - ln_gamma_variate(rng, b)
            }
            ClosedFormLaw::GeneralizedGamma {
                scale,
                shape,
                power,
            } => ln_gamma_variate(rng, shape / power) / power + scale.ln(),
        }
    }

    /// One draw, floored at the smallest normal float.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ClosedFormLaw::Beta { a, b } => beta_variate(rng, a, b),
            _ => self.sample_ln(rng).exp().clamp(f64::MIN_POSITIVE, f64::MAX),
        }
    }
}

/// The exact atom-size law of the approximation with `K` atoms when `d = 0`.
pub fn aifa_closed_form(spec: &RateMeasureSpec, k: usize) -> Result<ClosedFormLaw> {
    if spec.discount() != 0.0 {
        return Err(Error::Unsupported(
            "closed-form approximation requires zero discount",
        ));
    }
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "K",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let kf = k as f64;
    let gamma = spec.mass();
    let law = match spec.params() {
        FamilyParams::Beta { eta } => ClosedFormLaw::Beta {
            a: gamma * eta / kf,
            b: eta,
        },
        FamilyParams::Gamma { rate } => ClosedFormLaw::Gamma {
            shape: gamma * rate / kf,
            rate,
        },
        FamilyParams::BetaPrime { eta } => ClosedFormLaw::BetaPrime {
            a: gamma * eta / kf,
            b: eta,
        },
        FamilyParams::GeneralizedGamma { eta1, eta2 } => ClosedFormLaw::GeneralizedGamma {
            scale: 1.0 / eta1,
            shape: gamma * eta1 * eta2 / (kf * crate::special::gamma(1.0 / eta2)),
            power: eta2,
        },
    };
    law.validate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Quadrature;
    use crate::rng::split;

    #[test]
    fn presets() {
        let bp = RateMeasureSpec::beta_process(2.0, 3.0, 0.0).unwrap();
        assert_eq!(
            aifa_closed_form(&bp, 10).unwrap(),
            ClosedFormLaw::Beta { a: 0.6, b: 3.0 }
        );
        let gp = RateMeasureSpec::gamma_process(2.0, 0.5, 0.0).unwrap();
        assert_eq!(
            aifa_closed_form(&gp, 4).unwrap(),
            ClosedFormLaw::Gamma {
                shape: 0.25,
                rate: 0.5
            }
        );
        let bpp = RateMeasureSpec::beta_prime_process(1.0, 2.0, 0.0).unwrap();
        assert_eq!(
            aifa_closed_form(&bpp, 4).unwrap(),
            ClosedFormLaw::BetaPrime { a: 0.5, b: 2.0 }
        );
        let with_discount = RateMeasureSpec::beta_process(2.0, 0.0, 0.6).unwrap();
        assert!(matches!(
            aifa_closed_form(&with_discount, 10),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn densities_integrate_to_one() {
        let q = Quadrature::default();
        let laws = [
            ClosedFormLaw::Beta { a: 2.5, b: 1.5 },
            ClosedFormLaw::Gamma {
                shape: 3.0,
                rate: 2.0,
            },
            ClosedFormLaw::BetaPrime { a: 2.0, b: 3.0 },
            ClosedFormLaw::GeneralizedGamma {
                scale: 0.7,
                shape: 2.0,
                power: 1.7,
            },
        ];
        for law in laws {
            let r = if law.support_upper() == 1.0 {
                q.integrate(|x| law.ln_pdf(x).exp(), 0.0, 1.0)
            } else {
                q.integrate_to_infinity(|x| law.ln_pdf(x).exp(), 0.0)
            }
            .unwrap();
            assert!((r.value - 1.0).abs() < 1e-8, "{law:?}: {}", r.value);
        }
    }

    #[test]
    fn sample_means() {
        let mut rng = split(11, 0);
        let laws = [
            ClosedFormLaw::Beta { a: 0.2, b: 2.0 },
            ClosedFormLaw::Gamma {
                shape: 0.3,
                rate: 2.0,
            },
            ClosedFormLaw::BetaPrime { a: 0.5, b: 4.0 },
            ClosedFormLaw::GeneralizedGamma {
                scale: 2.0,
                shape: 0.5,
                power: 2.0,
            },
        ];
        for law in laws {
            let n = 200_000;
            let xs: alloc::vec::Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
            let m = xs.iter().sum::<f64>() / n as f64;
            let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
            let se = (v / n as f64).sqrt();
            assert!((m - law.mean()).abs() < 4.0 * se, "{law:?}: {m} vs {}", law.mean());
        }
    }
}
