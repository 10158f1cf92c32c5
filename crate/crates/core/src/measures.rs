//! Rate measures of completely random measures and approximate indicators.
//!
//! A rate measure has Lebesgue density
//! `γ θ^{-1-d} g(θ)^{-d} h(θ) / Z(1-d)` with `Z(ξ) = ∫ θ^{ξ-1} g(θ)^ξ h(θ) dθ`.

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::special::{ln_beta, ln_gamma};

/// The four supported families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Beta,
    BetaPrime,
    Gamma,
    GeneralizedGamma,
}

/// Family-specific hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyParams {
    /// `h(θ) = (1-θ)^{η-1}` on `(0, 1]`.
    Beta { eta: f64 },
    /// `g(θ) = (1+θ)^{-1}`, `h(θ) = (1+θ)^{-η}`.
    BetaPrime { eta: f64 },
    /// `h(θ) = e^{-λθ}`.
    Gamma { rate: f64 },
    /// `h(θ) = exp(-(η₁θ)^{η₂})`.
    GeneralizedGamma { eta1: f64, eta2: f64 },
}

impl FamilyParams {
    pub fn family(&self) -> Family {
        match self {
            FamilyParams::Beta { .. } => Family::Beta,
            FamilyParams::BetaPrime { .. } => Family::BetaPrime,
            FamilyParams::Gamma { .. } => Family::Gamma,
            FamilyParams::GeneralizedGamma { .. } => Family::GeneralizedGamma,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            FamilyParams::Beta { eta } | FamilyParams::BetaPrime { eta } => {
                positive("eta", eta)?;
            }
            FamilyParams::Gamma { rate } => {
                positive("rate", rate)?;
            }
            FamilyParams::GeneralizedGamma { eta1, eta2 } => {
                positive("eta1", eta1)?;
                positive("eta2", eta2)?;
            }
        }
        Ok(())
    }
}

/// A validated, immutable rate measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct RateMeasureSpec {
    mass: f64,
    discount: f64,
    params: FamilyParams,
}

impl RateMeasureSpec {
    pub fn new(mass: f64, discount: f64, params: FamilyParams) -> Result<Self> {
        positive("gamma", mass)?;
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidParameter {
                name: "discount",
                value: discount,
                reason: "must lie in [0, 1)",
            });
        }
        params.validate()?;
        Ok(Self {
            mass,
            discount,
            params,
        })
    }

    /// Beta process with mass `γ`, concentration `α` and discount `d` (`η = α + d`).
    pub fn beta_process(mass: f64, concentration: f64, discount: f64) -> Result<Self> {
        Self::new(
            mass,
            discount,
            FamilyParams::Beta {
                eta: concentration + discount,
            },
        )
    }

    pub fn gamma_process(mass: f64, rate: f64, discount: f64) -> Result<Self> {
        Self::new(mass, discount, FamilyParams::Gamma { rate })
    }

    pub fn beta_prime_process(mass: f64, eta: f64, discount: f64) -> Result<Self> {
        Self::new(mass, discount, FamilyParams::BetaPrime { eta })
    }

    pub fn generalized_gamma_process(mass: f64, eta1: f64, eta2: f64, discount: f64) -> Result<Self> {
        Self::new(mass, discount, FamilyParams::GeneralizedGamma { eta1, eta2 })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn params(&self) -> FamilyParams {
        self.params
    }

    pub fn family(&self) -> Family {
        self.params.family()
    }

    /// Beta-family concentration `α = η - d`; `None` for other families.
    pub fn concentration(&self) -> Option<f64> {
        match self.params {
            FamilyParams::Beta { eta } => Some(eta - self.discount),
            _ => None,
        }
    }

    /// Right end of the support.
    pub fn support_upper(&self) -> f64 {
        match self.params {
            FamilyParams::Beta { .. } => 1.0,
            _ => f64::INFINITY,
        }
    }

    pub fn check_support(&self, theta: f64) -> Result<()> {
        if !(theta > 0.0) || theta.is_nan() {
            return Err(Error::Domain {
                what: "theta",
                value: theta,
                reason: "must be strictly positive",
            });
        }
        if theta > self.support_upper() {
            return Err(Error::Domain {
                what: "theta",
                value: theta,
                reason: "outside the family's support",
            });
        }
        Ok(())
    }

    /// `ln g(θ)`.
    pub fn ln_g(&self, theta: f64) -> f64 {
        match self.params {
            FamilyParams::BetaPrime { .. } => -theta.ln_1p(),
            _ => 0.0,
        }
    }

    /// `ln h(θ)` on the support.
    pub fn ln_h(&self, theta: f64) -> f64 {
        match self.params {
            FamilyParams::Beta { eta } => {
                if eta == 1.0 {
                    0.0
                } else if theta >= 1.0 {
                    if eta > 1.0 {
                        f64::NEG_INFINITY
                    } else {
                        f64::INFINITY
                    }
                } else {
                    (eta - 1.0) * (-theta).ln_1p()
                }
            }
            FamilyParams::BetaPrime { eta } => -eta * theta.ln_1p(),
            FamilyParams::Gamma { rate } => -rate * theta,
            FamilyParams::GeneralizedGamma { eta1, eta2 } => -(eta1 * theta).powf(eta2),
        }
    }

    /// `ln Z(ξ)` for `ξ > 0`.
    pub fn ln_normalizer(&self, xi: f64) -> Result<f64> {
        if !(xi > 0.0) || !xi.is_finite() {
            return Err(Error::Domain {
                what: "xi",
                value: xi,
                reason: "normalizer converges only for xi > 0",
            });
        }
        Ok(match self.params {
            FamilyParams::Beta { eta } | FamilyParams::BetaPrime { eta } => ln_beta(xi, eta),
            FamilyParams::Gamma { rate } => ln_gamma(xi) - xi * rate.ln(),
            FamilyParams::GeneralizedGamma { eta1, eta2 } => {
                ln_gamma(xi / eta2) - xi * (eta1 * eta2).ln()
            }
        })
    }

    /// `Z(ξ)`.
    pub fn normalizer(&self, xi: f64) -> Result<f64> {
        self.ln_normalizer(xi).map(f64::exp)
    }

    /// `ln ν(θ)`.
    pub fn ln_rate_density(&self, theta: f64) -> Result<f64> {
        self.check_support(theta)?;
        let d = self.discount;
        let ln_h = self.ln_h(theta);
        if ln_h == f64::INFINITY {
            return Err(Error::Domain {
                what: "theta",
                value: theta,
                reason: "density is infinite at this endpoint",
            });
        }
        Ok(self.mass.ln() - (1.0 + d) * theta.ln() - d * self.ln_g(theta) + ln_h
            - self.ln_normalizer(1.0 - d)?)
    }

    /// `ν(θ)`.
    pub fn rate_density(&self, theta: f64) -> Result<f64> {
        self.ln_rate_density(theta).map(f64::exp)
    }

    /// `c = γ h(0) / Z(1 - d)`; every family here has `h(0) = 1`.
    pub fn aifa_constant(&self) -> f64 {
        let ln_z = self
            .ln_normalizer(1.0 - self.discount)
            .expect("validated discount");
        self.mass * (-ln_z).exp()
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExtras {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta2: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    family: Family,
    gamma: f64,
    #[serde(default)]
    discount: f64,
    extras: RawExtras,
}

fn missing(name: &'static str) -> Error {
    Error::InvalidParameter {
        name,
        value: f64::NAN,
        reason: "required for this family",
    }
}

impl TryFrom<RawSpec> for RateMeasureSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let e = raw.extras;
        let params = match raw.family {
            Family::Beta => {
                let eta = match (e.eta, e.alpha) {
                    (Some(eta), None) => eta,
                    (None, Some(alpha)) => alpha + raw.discount,
                    (Some(_), Some(_)) => {
                        return Err(Error::InvalidParameter {
                            name: "alpha",
                            value: f64::NAN,
                            reason: "give either eta or alpha, not both",
                        })
                    }
                    (None, None) => return Err(missing("alpha")),
                };
                FamilyParams::Beta { eta }
            }
            Family::BetaPrime => FamilyParams::BetaPrime {
                eta: e.eta.ok_or_else(|| missing("eta"))?,
            },
            Family::Gamma => FamilyParams::Gamma {
                rate: e.rate.ok_or_else(|| missing("rate"))?,
            },
            Family::GeneralizedGamma => FamilyParams::GeneralizedGamma {
                eta1: e.eta1.ok_or_else(|| missing("eta1"))?,
                eta2: e.eta2.ok_or_else(|| missing("eta2"))?,
            },
        };
        RateMeasureSpec::new(raw.gamma, raw.discount, params)
    }
}

impl From<RateMeasureSpec> for RawSpec {
    fn from(s: RateMeasureSpec) -> Self {
        let mut extras = RawExtras::default();
        match s.params {
            FamilyParams::Beta { eta } | FamilyParams::BetaPrime { eta } => extras.eta = Some(eta),
            FamilyParams::Gamma { rate } => extras.rate = Some(rate),
            FamilyParams::GeneralizedGamma { eta1, eta2 } => {
                extras.eta1 = Some(eta1);
                extras.eta2 = Some(eta2);
            }
        }
        RawSpec {
            family: s.family(),
            gamma: s.mass,
            discount: s.discount,
            extras,
        }
    }
}

/// Shape of an approximate indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorKind {
    Hard,
    Smoothed,
}

/// Non-decreasing step from 0 (for `θ <= 0`) to 1 (for `θ >= b`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxIndicator {
    pub kind: IndicatorKind,
    pub width: f64,
}

impl ApproxIndicator {
    pub fn new(kind: IndicatorKind, width: f64) -> Result<Self> {
        positive("width", width)?;
        Ok(Self { kind, width })
    }

    pub fn smoothed(width: f64) -> Result<Self> {
        Self::new(IndicatorKind::Smoothed, width)
    }

    pub fn hard() -> Self {
        Self {
            kind: IndicatorKind::Hard,
            width: f64::MIN_POSITIVE,
        }
    }

    pub fn value(&self, theta: f64) -> f64 {
        match self.kind {
            IndicatorKind::Hard => {
                if theta > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            IndicatorKind::Smoothed => {
                let b = self.width;
                if theta <= 0.0 {
                    0.0
                } else if theta >= b {
                    1.0
                } else {
                    let r = (theta - b) / b;
                    let w = 1.0 - r * r;
                    (1.0 - 1.0 / w).exp()
                }
            }
        }
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        match self.kind {
            IndicatorKind::Hard => 0.0,
            IndicatorKind::Smoothed => {
                let b = self.width;
                if theta <= 0.0 || theta >= b {
                    0.0
                } else {
                    let r = (theta - b) / b;
                    let w = 1.0 - r * r;
                    let s = (1.0 - 1.0 / w).exp();
                    if s == 0.0 {
                        return 0.0;
                    }
                    s / (w * w) * (-2.0 * r / b)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn beta_density_example() {
        let s = RateMeasureSpec::beta_process(1.0, 1.0, 0.0).unwrap();
        assert!(rel(s.rate_density(0.5).unwrap(), 2.0) < 1e-14);
        assert!(matches!(s.rate_density(1.5), Err(Error::Domain { .. })));
        assert!(matches!(s.rate_density(0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn beta_density_matches_gamma_function_form() {
        // γ Γ(α+1)/(Γ(1-d)Γ(α+d)) θ^{-1-d} (1-θ)^{α+d-1}
        let (g, a, d, t) = (1.7, 0.8, 0.35, 0.21);
        let s = RateMeasureSpec::beta_process(g, a, d).unwrap();
        let hand = g * libm::tgamma(a + 1.0) / (libm::tgamma(1.0 - d) * libm::tgamma(a + d))
            * t.powf(-1.0 - d)
            * (1.0 - t).powf(a + d - 1.0);
        assert!(rel(s.rate_density(t).unwrap(), hand) < 1e-12);
    }

    #[test]
    fn gamma_density_example() {
        let s = RateMeasureSpec::gamma_process(1.0, 1.0, 0.0).unwrap();
        assert!(rel(s.rate_density(1.0).unwrap(), (-1.0f64).exp()) < 1e-14);
    }

    #[test]
    fn normalizer_examples() {
        let b = RateMeasureSpec::beta_process(1.0, 1.0, 0.0).unwrap();
        assert!(rel(b.normalizer(1.0).unwrap(), 1.0) < 1e-14);
        let g = RateMeasureSpec::gamma_process(1.0, 2.0, 0.0).unwrap();
        assert!(rel(g.normalizer(2.0).unwrap(), 0.25) < 1e-14);
        let gg = RateMeasureSpec::generalized_gamma_process(1.0, 1.5, 0.7, 0.0).unwrap();
        let xi = 0.4;
        let hand = libm::tgamma(xi / 0.7) * (1.5f64 * 0.7).powf(-xi);
        assert!(rel(gg.normalizer(xi).unwrap(), hand) < 1e-13);
        assert!(b.normalizer(0.0).is_err());
    }

    #[test]
    fn validation() {
        assert!(RateMeasureSpec::beta_process(0.0, 1.0, 0.0).is_err());
        assert!(RateMeasureSpec::beta_process(1.0, 1.0, 1.0).is_err());
        assert!(RateMeasureSpec::beta_process(1.0, -0.5, 0.3).is_err());
        assert!(RateMeasureSpec::beta_process(2.0, 0.0, 0.6).is_ok());
        assert!(RateMeasureSpec::gamma_process(1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn indicator_examples() {
        let s = ApproxIndicator::smoothed(0.1).unwrap();
        assert_eq!(s.value(-0.5), 0.0);
        assert_eq!(s.value(0.2), 1.0);
        let s = ApproxIndicator::smoothed(1.0).unwrap();
        assert!(rel(s.value(0.5), (-1.0f64 / 3.0).exp()) < 1e-15);
        let h = ApproxIndicator::hard();
        assert_eq!(h.value(0.0), 0.0);
        assert_eq!(h.value(1e-300), 1.0);
    }

    #[test]
    fn indicator_derivative_matches_finite_differences() {
        for &b in &[0.01, 0.3, 2.0] {
            let s = ApproxIndicator::smoothed(b).unwrap();
            for &f in &[0.0, 0.25, 0.5, 0.75, 1.0] {
                let t = f * b;
                let h = 1e-6 * b;
                let fd = (s.value(t + h) - s.value(t - h)) / (2.0 * h);
                let an = s.derivative(t);
                let scale = an.abs().max(1.0 / b);
                assert!((fd - an).abs() <= 1e-6 * scale, "b={b} t={t}: {fd} vs {an}");
            }
            assert_eq!(s.derivative(0.0), 0.0);
            assert_eq!(s.derivative(b), 0.0);
        }
    }

    #[test]
    fn json_round_trip() {
        let s = RateMeasureSpec::beta_process(2.0, 0.5, 0.3).unwrap();
        let js = serde_json::to_string(&s).unwrap();
        let back: RateMeasureSpec = serde_json::from_str(&js).unwrap();
        assert_eq!(s, back);
        let parsed: RateMeasureSpec = serde_json::from_str(
            r#"{"family":"beta","gamma":2,"discount":0.6,"extras":{"alpha":0}}"#,
        )
        .unwrap();
        assert!((parsed.concentration().unwrap()).abs() < 1e-15);
        assert!(serde_json::from_str::<RateMeasureSpec>(
            r#"{"family":"gamma","gamma":1,"discount":0,"extras":{"rate":1},"bogus":1}"#
        )
        .is_err());
        assert!(serde_json::from_str::<RateMeasureSpec>(
            r#"{"family":"gamma","gamma":1,"discount":0,"extras":{"rate":-1}}"#
        )
        .is_err());
    }

    fn any_spec() -> impl Strategy<Value = RateMeasureSpec> {
        (0.1f64..5.0, 0.0f64..0.95, 0.1f64..4.0, 0.2f64..3.0, 0usize..4).prop_map(
            |(g, d, e1, e2, f)| {
                let p = match f {
                    0 => FamilyParams::Beta { eta: e1 },
                    1 => FamilyParams::BetaPrime { eta: e1 },
                    2 => FamilyParams::Gamma { rate: e1 },
                    _ => FamilyParams::GeneralizedGamma { eta1: e1, eta2: e2 },
                };
                RateMeasureSpec::new(g, d, p).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn log_and_linear_density_agree(spec in any_spec(), u in 0.001f64..0.999) {
            let theta = if spec.support_upper() == 1.0 { u } else { u / (1.0 - u) };
            let ln = spec.ln_rate_density(theta).unwrap();
            let d = spec.discount();
            let lin = spec.mass() * theta.powf(-1.0 - d) * spec.ln_g(theta).exp().powf(-d)
                * spec.ln_h(theta).exp() / spec.normalizer(1.0 - d).unwrap();
            if lin.is_normal() {
                prop_assert!(rel(ln.exp(), lin) < 1e-12);
            }
        }

        #[test]
        fn smoothed_indicator_is_monotone(b in 1e-4f64..10.0, u in 0.0f64..1.0, v in 0.0f64..1.0) {
            let s = ApproxIndicator::smoothed(b).unwrap();
            let (lo, hi) = if u < v { (u, v) } else { (v, u) };
            prop_assert!(s.value(lo * b) <= s.value(hi * b));
            prop_assert!((0.0..=1.0).contains(&s.value(u * 2.0 * b - 0.5 * b)));
        }
    }
}
