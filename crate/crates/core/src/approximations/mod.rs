//! Finite approximations: atom-size laws and their samplers.

pub mod aifa;
pub mod bfry;
pub mod closed_form;
pub mod fsd;
pub mod table;
pub mod tfa;

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use aifa::{AifaConfig, AifaDensity, RejectionSampler, WidthRule};
pub use bfry::{bfry_log_density, bfry_weight, Bfry};
pub use closed_form::{aifa_closed_form, ClosedFormLaw};
pub use fsd::FiniteSymmetricDirichlet;
pub use table::InverseCdfTable;
pub use tfa::{BetaStickBreaking, Bondesson, TruncatedStickBreaking};

use crate::error::{positive, Error, Result};
use crate::measures::{IndicatorKind, RateMeasureSpec};

/// A finite-approximation law for a vector of atom sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeightDistribution", into = "RawWeightDistribution")]
pub enum WeightDistribution {
    /// I.i.d. atoms from the numerically normalized density.
    AifaNumeric(AifaConfig),
    /// I.i.d. atoms from the named law (zero discount only).
    AifaClosedForm { spec: RateMeasureSpec, k: usize },
    Bondesson { gamma: f64, alpha: f64, k: usize },
    /// `k` counts rounds; the number of atoms is random.
    BetaStickBreaking { gamma: f64, alpha: f64, k: usize },
    Tsb { alpha: f64, k: usize },
    Fsd { gamma: f64, k: usize },
    /// I.i.d. `S/(S+1)` with `S ~ BFRY(γ/K, d)`.
    Bfry { gamma: f64, discount: f64, k: usize },
}

impl WeightDistribution {
    pub fn k(&self) -> usize {
        match *self {
            WeightDistribution::AifaNumeric(cfg) => cfg.k,
            WeightDistribution::AifaClosedForm { k, .. }
            | WeightDistribution::Bondesson { k, .. }
            | WeightDistribution::BetaStickBreaking { k, .. }
            | WeightDistribution::Tsb { k, .. }
            | WeightDistribution::Fsd { k, .. }
            | WeightDistribution::Bfry { k, .. } => k,
        }
    }

    pub fn kind(&self) -> WeightKind {
        match self {
            WeightDistribution::AifaNumeric(_) => WeightKind::AifaNumeric,
            WeightDistribution::AifaClosedForm { .. } => WeightKind::AifaClosedForm,
            WeightDistribution::Bondesson { .. } => WeightKind::Bondesson,
            WeightDistribution::BetaStickBreaking { .. } => WeightKind::BetaStickBreaking,
            WeightDistribution::Tsb { .. } => WeightKind::Tsb,
            WeightDistribution::Fsd { .. } => WeightKind::Fsd,
            WeightDistribution::Bfry { .. } => WeightKind::Bfry,
        }
    }

    /// Validates parameters and builds any tables the sampler needs.
    pub fn prepare(&self) -> Result<WeightSampler> {
        if self.k() == 0 && !matches!(self, WeightDistribution::BetaStickBreaking { .. }) {
            return Err(Error::InvalidParameter {
                name: "K",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(match *self {
            WeightDistribution::AifaNumeric(cfg) => {
                let table = cfg.density()?.table()?;
                WeightSampler::Table {
                    table,
                    k: cfg.k,
                    bfry: false,
                }
            }
            WeightDistribution::AifaClosedForm { spec, k } => WeightSampler::ClosedForm {
                law: aifa_closed_form(&spec, k)?,
                k,
            },
            WeightDistribution::Bondesson { gamma, alpha, k } => {
                WeightSampler::Bondesson(Bondesson::new(gamma, alpha, k)?)
            }
            WeightDistribution::BetaStickBreaking { gamma, alpha, k } => {
                WeightSampler::BetaStickBreaking(BetaStickBreaking::new(gamma, alpha, k)?)
            }
            WeightDistribution::Tsb { alpha, k } => {
                WeightSampler::Tsb(TruncatedStickBreaking::new(alpha, k)?)
            }
            WeightDistribution::Fsd { gamma, k } => {
                WeightSampler::Fsd(FiniteSymmetricDirichlet::new(gamma, k)?)
            }
            WeightDistribution::Bfry { gamma, discount, k } => {
                positive("gamma", gamma)?;
                let table = Bfry::new(gamma / k as f64, discount)?.table()?;
                WeightSampler::Table {
                    table,
                    k,
                    bfry: true,
                }
            }
        })
    }
}

/// A prepared sampler for a [`WeightDistribution`].
#[derive(Debug, Clone)]
pub enum WeightSampler {
    Table {
        table: InverseCdfTable,
        k: usize,
        bfry: bool,
    },
    ClosedForm {
        law: ClosedFormLaw,
        k: usize,
    },
    Bondesson(Bondesson),
    BetaStickBreaking(BetaStickBreaking),
    Tsb(TruncatedStickBreaking),
    Fsd(FiniteSymmetricDirichlet),
}

impl WeightSampler {
    /// One vector of atom sizes.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            WeightSampler::Table { table, k, bfry } => (0..*k)
                .map(|_| {
                    let x = table.sample(rng);
                    if *bfry {
                        bfry_weight(x.ln())
                    } else {
                        x
                    }
                })
                .collect(),
            WeightSampler::ClosedForm { law, k } => (0..*k).map(|_| law.sample(rng)).collect(),
            WeightSampler::Bondesson(b) => b.sample(rng),
            WeightSampler::BetaStickBreaking(b) => b.sample(rng),
            WeightSampler::Tsb(t) => t.sample(rng),
            WeightSampler::Fsd(f) => f.sample(rng),
        }
    }
}

/// Serialized tag of a [`WeightDistribution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    AifaNumeric,
    AifaClosedForm,
    Bondesson,
    BetaStickBreaking,
    Tsb,
    Fsd,
    Bfry,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spec: Option<RateMeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<WidthRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    indicator: Option<IndicatorKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    discount: Option<f64>,
}

impl RawParams {
    fn present(&self) -> [(&'static str, bool); 7] {
        [
            ("spec", self.spec.is_some()),
            ("a", self.a.is_some()),
            ("width", self.width.is_some()),
            ("indicator", self.indicator.is_some()),
            ("gamma", self.gamma.is_some()),
            ("alpha", self.alpha.is_some()),
            ("discount", self.discount.is_some()),
        ]
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        for (name, set) in self.present() {
            if set && !allowed.contains(&name) {
                return Err(Error::InvalidParameter {
                    name,
                    value: f64::NAN,
                    reason: "not a parameter of this kind",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeightDistribution {
    kind: WeightKind,
    #[serde(rename = "K")]
    k: usize,
    #[serde(default)]
    params: RawParams,
}

fn need(name: &'static str, v: Option<f64>) -> Result<f64> {
    v.ok_or(Error::InvalidParameter {
        name,
        value: f64::NAN,
        reason: "required for this kind",
    })
}

impl TryFrom<RawWeightDistribution> for WeightDistribution {
    type Error = Error;

    fn try_from(raw: RawWeightDistribution) -> Result<Self> {
        let p = raw.params;
        let k = raw.k;
        let spec = || {
            p.spec.ok_or(Error::InvalidParameter {
                name: "spec",
                value: f64::NAN,
                reason: "required for this kind",
            })
        };
        Ok(match raw.kind {
            WeightKind::AifaNumeric => {
                p.only(&["spec", "a", "width", "indicator"])?;
                let mut cfg = AifaConfig::new(spec()?, k)?;
                if let Some(a) = p.a {
                    cfg = cfg.with_offset(a)?;
                }
                if let Some(w) = p.width {
                    cfg = cfg.with_width(w)?;
                }
                if let Some(i) = p.indicator {
                    cfg = cfg.with_indicator(i);
                }
                WeightDistribution::AifaNumeric(cfg)
            }
            WeightKind::AifaClosedForm => {
                p.only(&["spec"])?;
                let spec = spec()?;
                aifa_closed_form(&spec, k)?;
                WeightDistribution::AifaClosedForm { spec, k }
            }
            WeightKind::Bondesson => {
                p.only(&["gamma", "alpha"])?;
                let b = Bondesson::new(need("gamma", p.gamma)?, need("alpha", p.alpha)?, k)?;
                WeightDistribution::Bondesson {
                    gamma: b.gamma,
                    alpha: b.alpha,
                    k,
                }
            }
            WeightKind::BetaStickBreaking => {
                p.only(&["gamma", "alpha"])?;
                let b = BetaStickBreaking::new(need("gamma", p.gamma)?, need("alpha", p.alpha)?, k)?;
                WeightDistribution::BetaStickBreaking {
                    gamma: b.gamma,
                    alpha: b.alpha,
                    k,
                }
            }
            WeightKind::Tsb => {
                p.only(&["alpha"])?;
                let t = TruncatedStickBreaking::new(need("alpha", p.alpha)?, k)?;
                WeightDistribution::Tsb { alpha: t.alpha, k }
            }
            WeightKind::Fsd => {
                p.only(&["gamma"])?;
                let f = FiniteSymmetricDirichlet::new(need("gamma", p.gamma)?, k)?;
                WeightDistribution::Fsd { gamma: f.gamma, k }
            }
            WeightKind::Bfry => {
                p.only(&["gamma", "discount"])?;
                let gamma = need("gamma", p.gamma)?;
                let discount = need("discount", p.discount)?;
                positive("gamma", gamma)?;
                if k == 0 {
                    return Err(Error::InvalidParameter {
                        name: "K",
                        value: 0.0,
                        reason: "must be at least 1",
                    });
                }
                Bfry::new(gamma / k as f64, discount)?;
                WeightDistribution::Bfry { gamma, discount, k }
            }
        })
    }
}

impl From<WeightDistribution> for RawWeightDistribution {
    fn from(w: WeightDistribution) -> Self {
        let mut p = RawParams::default();
        match w {
            WeightDistribution::AifaNumeric(cfg) => {
                p.spec = Some(cfg.spec);
                p.a = Some(cfg.a);
                p.width = Some(cfg.width);
                p.indicator = Some(cfg.indicator);
            }
            WeightDistribution::AifaClosedForm { spec, .. } => p.spec = Some(spec),
            WeightDistribution::Bondesson { gamma, alpha, .. }
            | WeightDistribution::BetaStickBreaking { gamma, alpha, .. } => {
                p.gamma = Some(gamma);
                p.alpha = Some(alpha);
            }
            WeightDistribution::Tsb { alpha, .. } => p.alpha = Some(alpha),
            WeightDistribution::Fsd { gamma, .. } => p.gamma = Some(gamma),
            WeightDistribution::Bfry {
                gamma, discount, ..
            } => {
                p.gamma = Some(gamma);
                p.discount = Some(discount);
            }
        }
        RawWeightDistribution {
            kind: w.kind(),
            k: w.k(),
            params: p,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::split;

    #[test]
    fn json_forms() {
        let w: WeightDistribution =
            serde_json::from_str(r#"{"kind":"fsd","K":2,"params":{"gamma":1}}"#).unwrap();
        assert_eq!(w, WeightDistribution::Fsd { gamma: 1.0, k: 2 });
        let back: WeightDistribution =
            serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        assert_eq!(w, back);
        assert!(serde_json::from_str::<WeightDistribution>(
            r#"{"kind":"fsd","K":2,"params":{"gamma":1,"alpha":2}}"#
        )
        .is_err());
        assert!(serde_json::from_str::<WeightDistribution>(
            r#"{"kind":"fsd","K":2,"params":{"gamma":1},"extra":0}"#
        )
        .is_err());
        assert!(serde_json::from_str::<WeightDistribution>(
            r#"{"kind":"bondesson","K":2,"params":{"gamma":1,"alpha":0.5}}"#
        )
        .is_err());
        let aifa: WeightDistribution = serde_json::from_str(
            r#"{"kind":"aifa_numeric","K":100,"params":{"spec":{"family":"beta","gamma":2,"discount":0.6,"extras":{"alpha":0}}}}"#,
        )
        .unwrap();
        assert_eq!(aifa.k(), 100);
        let back: WeightDistribution =
            serde_json::from_str(&serde_json::to_string(&aifa).unwrap()).unwrap();
        assert_eq!(aifa, back);
    }

    #[test]
    fn lengths_and_reproducibility() {
        let spec = RateMeasureSpec::beta_process(2.0, 1.0, 0.0).unwrap();
        let dists = [
            WeightDistribution::AifaClosedForm { spec, k: 7 },
            WeightDistribution::AifaNumeric(AifaConfig::new(spec, 7).unwrap()),
            WeightDistribution::Bondesson {
                gamma: 1.0,
                alpha: 2.0,
                k: 7,
            },
            WeightDistribution::Tsb { alpha: 1.0, k: 7 },
            WeightDistribution::Fsd { gamma: 1.0, k: 7 },
            WeightDistribution::Bfry {
                gamma: 2.0,
                discount: 0.6,
                k: 7,
            },
        ];
        for d in dists {
            let s = d.prepare().unwrap();
            let a = s.sample(&mut split(3, 4));
            let b = s.sample(&mut split(3, 4));
            assert_eq!(a.len(), 7);
            assert_eq!(a, b);
            assert!(a.iter().all(|&x| x > 0.0));
        }
    }
}
