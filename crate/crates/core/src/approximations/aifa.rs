//! Automated independent finite approximations.
//!
//! With `K` atoms the atom-size density is
//! `θ^{-1 + s - d S(θ - a/K)} g(θ)^{s - d} h(θ) / Z_K` where `s = c/K`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::closed_form::ClosedFormLaw;
use super::table::{Coordinate, InverseCdfTable, UpperTail};
use crate::error::{positive, Error, Result};
use crate::measures::{ApproxIndicator, FamilyParams, IndicatorKind, RateMeasureSpec};
use crate::quadrature::Quadrature;
use crate::rng::open01;
use crate::stats::ks_two_sample;

/// Number of knots in the inverse-CDF table.
pub const TABLE_KNOTS: usize = 4096;

/// Indicator width `b_K` as a function of `K`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum WidthRule {
    /// `1/K`
    #[default]
    InverseK,
    /// `1/√K`
    InverseSqrtK,
    /// `scale · K^{-exponent}`
    Power { scale: f64, exponent: f64 },
}

impl WidthRule {
    pub fn width(&self, k: usize) -> f64 {
        let kf = k as f64;
        match *self {
            WidthRule::InverseK => 1.0 / kf,
            WidthRule::InverseSqrtK => 1.0 / kf.sqrt(),
            WidthRule::Power { scale, exponent } => scale * kf.powf(-exponent),
        }
    }

    fn validate(&self) -> Result<()> {
        if let WidthRule::Power { scale, exponent } = *self {
            positive("scale", scale)?;
            positive("exponent", exponent)?;
        }
        Ok(())
    }
}

fn default_offset() -> f64 {
    1.0
}

fn default_indicator() -> IndicatorKind {
    IndicatorKind::Smoothed
}

/// Configuration of an approximation with `K` i.i.d. atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AifaConfig {
    pub spec: RateMeasureSpec,
    #[serde(rename = "K")]
    pub k: usize,
    /// Offset `a`; the indicator switches on at `a/K`.
    #[serde(default = "default_offset")]
    pub a: f64,
    #[serde(default)]
    pub width: WidthRule,
    #[serde(default = "default_indicator")]
    pub indicator: IndicatorKind,
}

impl AifaConfig {
    /// Defaults: `a = 1`, `b_K = 1/K`, smoothed indicator.
    pub fn new(spec: RateMeasureSpec, k: usize) -> Result<Self> {
        let cfg = Self {
            spec,
            k,
            a: 1.0,
            width: WidthRule::InverseK,
            indicator: IndicatorKind::Smoothed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_offset(mut self, a: f64) -> Result<Self> {
        self.a = a;
        self.validate()?;
        Ok(self)
    }

    pub fn with_width(mut self, width: WidthRule) -> Result<Self> {
        self.width = width;
        self.validate()?;
        Ok(self)
    }

    pub fn with_indicator(mut self, kind: IndicatorKind) -> Self {
        self.indicator = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter {
                name: "K",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        positive("a", self.a)?;
        self.width.validate()
    }

    /// `s = c/K`.
    pub fn exponent_shift(&self) -> f64 {
        self.spec.aifa_constant() / self.k as f64
    }

    pub fn indicator(&self) -> ApproxIndicator {
        match self.indicator {
            IndicatorKind::Hard => ApproxIndicator::hard(),
            IndicatorKind::Smoothed => ApproxIndicator {
                kind: IndicatorKind::Smoothed,
                width: self.width.width(self.k),
            },
        }
    }

    /// Knot where the discount starts to act.
    pub fn onset(&self) -> f64 {
        self.a / self.k as f64
    }

    /// Knot where the discount is fully active.
    pub fn saturation(&self) -> f64 {
        match self.indicator {
            IndicatorKind::Hard => self.onset(),
            IndicatorKind::Smoothed => self.onset() + self.width.width(self.k),
        }
    }

    /// Prepares the normalized density.
    pub fn density(&self) -> Result<AifaDensity> {
        AifaDensity::new(*self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scheme {
    /// `u = θ^s`
    Power,
    /// `t = ln θ`
    Log,
    /// `v = (1-θ)^η`
    UnitTail,
    /// `t = ln θ` out to infinity
    LogTail,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    scheme: Scheme,
}

/// Normalized atom-size density with its normalizer cached.
#[derive(Debug, Clone)]
pub struct AifaDensity {
    cfg: AifaConfig,
    shift: f64,
    indicator: ApproxIndicator,
    segments: Vec<Segment>,
    ln_z: f64,
}

impl AifaDensity {
    pub fn new(cfg: AifaConfig) -> Result<Self> {
        cfg.validate()?;
        let shift = cfg.exponent_shift();
        let mut this = Self {
            cfg,
            shift,
            indicator: cfg.indicator(),
            segments: Vec::new(),
            ln_z: 0.0,
        };
        this.segments = this.build_segments();
        let upper = this.cfg.spec.support_upper();
        let z = this.integrate(0.0, upper, |_| 0.0, Quadrature::default())?;
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::NonFinite {
                variable: "normalizer",
            });
        }
        this.ln_z = z.ln();
        Ok(this)
    }

    pub fn config(&self) -> &AifaConfig {
        &self.cfg
    }

    /// `s = c/K`.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// `ln Z_K`.
    pub fn ln_normalizer(&self) -> f64 {
        self.ln_z
    }

    fn build_segments(&self) -> Vec<Segment> {
        let onset = self.cfg.onset();
        let sat = self.cfg.saturation();
        let mut out = Vec::new();
        if self.cfg.spec.support_upper() == 1.0 {
            let inner = [onset, sat]
                .into_iter()
                .filter(|&x| x < 1.0)
                .fold(0.5f64, f64::max);
            let cut = 0.5 * (1.0 + inner);
            let p_hi = onset.min(cut);
            out.push(Segment {
                lo: 0.0,
                hi: p_hi,
                scheme: Scheme::Power,
            });
            let mut lo = p_hi;
            for knot in [sat, cut] {
                if knot > lo && knot <= cut {
                    out.push(Segment {
                        lo,
                        hi: knot,
                        scheme: Scheme::Log,
                    });
                    lo = knot;
                }
            }
            out.push(Segment {
                lo: cut,
                hi: 1.0,
                scheme: Scheme::UnitTail,
            });
        } else {
            out.push(Segment {
                lo: 0.0,
                hi: onset,
                scheme: Scheme::Power,
            });
            if sat > onset {
                out.push(Segment {
                    lo: onset,
                    hi: sat,
                    scheme: Scheme::Log,
                });
            }
            out.push(Segment {
                lo: sat,
                hi: f64::INFINITY,
                scheme: Scheme::LogTail,
            });
        }
        out
    }

    /// Exponent of `θ` at `θ`.
    fn exponent(&self, theta: f64) -> f64 {
        -1.0 + self.shift - self.cfg.spec.discount() * self.indicator.value(theta - self.cfg.onset())
    }

    /// Log of the unnormalized density.
    pub fn ln_unnormalized(&self, theta: f64) -> f64 {
        let spec = &self.cfg.spec;
        self.exponent(theta) * theta.ln()
            + (self.shift - spec.discount()) * spec.ln_g(theta)
            + spec.ln_h(theta)
    }

    // Unnormalized density divided by θ^{s-1}; finite at θ = 0.
    fn ln_rest(&self, theta: f64) -> f64 {
        let spec = &self.cfg.spec;
        let d = spec.discount();
        let si = self.indicator.value(theta - self.cfg.onset());
        let power = if si == 0.0 { 0.0 } else { -d * si * theta.ln() };
        power + (self.shift - d) * spec.ln_g(theta) + spec.ln_h(theta)
    }

    fn integrate_segment<F: Fn(f64) -> f64>(
        &self,
        seg: Segment,
        lo: f64,
        hi: f64,
        ln_extra: &F,
        q: Quadrature,
    ) -> Result<f64> {
        let s = self.shift;
        match seg.scheme {
            Scheme::Power => {
                let r = q.integrate(
                    |u| {
                        let theta = (u.ln() / s).exp();
                        (self.ln_rest(theta) + ln_extra(theta)).exp() / s
                    },
                    lo.powf(s),
                    hi.powf(s),
                )?;
                Ok(r.value)
            }
            Scheme::Log => Ok(q
                .integrate_log_scale(
                    |theta| (self.ln_unnormalized(theta) + ln_extra(theta)).exp(),
                    lo,
                    hi,
                )?
                .value),
            Scheme::UnitTail => {
                let eta = match self.cfg.spec.params() {
                    FamilyParams::Beta { eta } => eta,
                    _ => unreachable!("unit tail only on the unit interval"),
                };
                let r = q.integrate(
                    |v| {
                        let one_minus = (v.ln() / eta).exp();
                        let theta = 1.0 - one_minus;
                        let spec = &self.cfg.spec;
                        let ln_f = self.exponent(theta) * theta.ln()
                            + (self.shift - spec.discount()) * spec.ln_g(theta)
                            + ln_extra(theta);
                        ln_f.exp() / eta
                    },
                    (1.0 - hi).max(0.0).powf(eta),
                    (1.0 - lo).powf(eta),
                )?;
                Ok(r.value)
            }
            Scheme::LogTail => {
                if hi.is_finite() {
                    let seg = Segment {
                        scheme: Scheme::Log,
                        ..seg
                    };
                    return self.integrate_segment(seg, lo, hi, ln_extra, q);
                }
                let t0 = lo.ln();
                Ok(q
                    .integrate_to_infinity(
                        |t| {
                            let theta = t.exp();
                            (self.ln_unnormalized(theta) + ln_extra(theta) + t).exp()
                        },
                        t0,
                    )?
                    .value)
            }
        }
    }

    fn integrate<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, ln_extra: F, q: Quadrature) -> Result<f64> {
        let mut total = 0.0;
        for &seg in &self.segments {
            let a = lo.max(seg.lo);
            let b = hi.min(seg.hi);
            if b > a {
                total += self.integrate_segment(seg, a, b, &ln_extra, q)?;
            }
        }
        Ok(total)
    }

    /// Normalized `ln ν_K(θ)`.
    pub fn ln_density(&self, theta: f64) -> Result<f64> {
        self.cfg.spec.check_support(theta)?;
        Ok(self.ln_unnormalized(theta) - self.ln_z)
    }

    /// `P(lo < τ ≤ hi)`.
    pub fn probability(&self, lo: f64, hi: f64) -> Result<f64> {
        let q = Quadrature {
            abs_tol: 1e-14,
            rel_tol: 1e-10,
            ..Quadrature::default()
        };
        Ok(self.integrate(lo.max(0.0), hi, |_| 0.0, q)? / self.ln_z.exp())
    }

    /// `E[f(τ)]` for `f = exp(ln_f)`.
    pub fn expectation<F: Fn(f64) -> f64>(&self, ln_f: F) -> Result<f64> {
        let q = Quadrature {
            abs_tol: 1e-14,
            rel_tol: 1e-11,
            ..Quadrature::default()
        };
        let upper = self.cfg.spec.support_upper();
        Ok(self.integrate(0.0, upper, ln_f, q)? / self.ln_z.exp())
    }

    /// Mean atom size.
    pub fn mean(&self) -> Result<f64> {
        self.expectation(|t| t.ln())
    }

    /// Builds the quantile-table sampler.
    pub fn table(&self) -> Result<InverseCdfTable> {
        let spec = &self.cfg.spec;
        let onset = self.cfg.onset();
        let sat = self.cfg.saturation();
        let first = 1e-12 * onset.min(1.0);
        let z = self.ln_z.exp();
        let q = Quadrature {
            abs_tol: 1e-16 * z,
            rel_tol: 1e-10,
            ..Quadrature::default()
        };
        let mut knots: Vec<f64>;
        let coord;
        let upper;
        let upper_mass;
        match spec.params() {
            FamilyParams::Beta { eta } => {
                coord = Coordinate::LogUnit;
                let n_lo = TABLE_KNOTS * 3 / 4;
                let n_hi = TABLE_KNOTS - n_lo;
                knots = geometric(first, 0.5, n_lo);
                let tail = geometric(1e-12, 0.5, n_hi);
                knots.extend(tail.iter().rev().map(|e| 1.0 - e));
                let last = 1.0 - 1e-12;
                upper_mass = self.integrate(last, 1.0, |_| 0.0, q)?;
                upper = UpperTail::UnitPower(eta);
            }
            FamilyParams::BetaPrime { eta } => {
                coord = Coordinate::Log;
                let last = 1e8 * sat.max(1.0);
                knots = geometric(first, last, TABLE_KNOTS);
                upper_mass = self.integrate(last, f64::INFINITY, |_| 0.0, q)?;
                upper = UpperTail::Power(eta);
            }
            _ => {
                coord = Coordinate::Log;
                let mut last = 2.0 * sat.max(1.0);
                while self.integrate(last, f64::INFINITY, |_| 0.0, q)? > 1e-14 * z {
                    last *= 2.0;
                    if last > 1e300 {
                        return Err(Error::NonFinite {
                            variable: "table upper knot",
                        });
                    }
                }
                knots = geometric(first, last, TABLE_KNOTS);
                upper_mass = 0.0;
                upper = UpperTail::Truncate;
            }
        }
        for k in [onset, sat] {
            if k > knots[0] && k < *knots.last().expect("nonempty") {
                knots.push(k);
            }
        }
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let lower_mass = self.integrate(0.0, knots[0], |_| 0.0, q)?;
        let mut masses = Vec::with_capacity(knots.len() - 1);
        for w in knots.windows(2) {
            masses.push(self.integrate(w[0], w[1], |_| 0.0, q)?);
        }
        InverseCdfTable::from_masses(
            &knots,
            lower_mass,
            &masses,
            upper_mass,
            coord,
            self.shift,
            upper,
        )
    }

    /// Envelope-rejection sampler used to validate the table.
    pub fn rejection_sampler(&self) -> Result<RejectionSampler> {
        let spec = &self.cfg.spec;
        let s = self.shift;
        let d = spec.discount();
        let onset = self.cfg.onset();
        let sat = self.cfg.saturation();
        let proposal = match spec.params() {
            FamilyParams::Beta { eta } => ClosedFormLaw::Beta { a: s, b: eta },
            FamilyParams::Gamma { rate } => ClosedFormLaw::Gamma { shape: s, rate },
            FamilyParams::BetaPrime { eta } => ClosedFormLaw::BetaPrime { a: s, b: eta },
            FamilyParams::GeneralizedGamma { eta1, eta2 } => ClosedFormLaw::GeneralizedGamma {
                scale: 1.0 / eta1,
                shape: s,
                power: eta2,
            },
        };
        let below = if onset < 1.0 { onset.powf(-d) } else { 1.0 };
        let ln_bound = match spec.params() {
            FamilyParams::BetaPrime { .. } => {
                let a = d * (1.0 + sat).ln();
                let b = d * core::f64::consts::LN_2 + below.ln();
                a.max(b)
            }
            _ => below.ln(),
        };
        Ok(RejectionSampler {
            proposal,
            ln_bound,
            discount: d,
            onset,
            indicator: self.indicator,
            spec: *spec,
        })
    }

    /// Two-sample Kolmogorov–Smirnov statistic between `draws` table and
    /// rejection draws.
    pub fn validate_table<R: Rng + ?Sized>(
        &self,
        table: &InverseCdfTable,
        draws: usize,
        rng: &mut R,
    ) -> Result<f64> {
        let rej = self.rejection_sampler()?;
        let a: Vec<f64> = (0..draws).map(|_| table.sample(rng).ln()).collect();
        let b: Vec<f64> = (0..draws).map(|_| rej.sample_ln(rng)).collect();
        Ok(ks_two_sample(&a, &b))
    }
}

/// Exact sampler by rejection from the zero-discount law with the same shift.
#[derive(Debug, Clone)]
pub struct RejectionSampler {
    proposal: ClosedFormLaw,
    ln_bound: f64,
    discount: f64,
    onset: f64,
    indicator: ApproxIndicator,
    spec: RateMeasureSpec,
}

impl RejectionSampler {
    /// Log of one exact draw.
    pub fn sample_ln<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let ln_theta = self.proposal.sample_ln(rng);
            let theta = ln_theta.exp();
            let si = self.indicator.value(theta - self.onset);
            let ln_ratio = -self.discount * (si * ln_theta + self.spec.ln_g(theta));
            if open01(rng).ln() + self.ln_bound <= ln_ratio {
                return ln_theta;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_ln(rng).exp().max(f64::MIN_POSITIVE)
    }
}

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximations::closed_form::aifa_closed_form;
    use crate::rng::split;

    fn bp(g: f64, a: f64, d: f64) -> RateMeasureSpec {
        RateMeasureSpec::beta_process(g, a, d).unwrap()
    }

    #[test]
    fn beta_example_value() {
        let cfg = AifaConfig::new(bp(1.0, 1.0, 0.0), 10).unwrap();
        let dens = cfg.density().unwrap();
        let v = dens.ln_density(0.5).unwrap();
        let hand = (0.1f64 * 0.5f64.powf(-0.9)).ln();
        assert!((v - hand).abs() < 1e-9, "{v} vs {hand}");
        assert!((hand + 1.67869).abs() < 1e-4);
    }

    #[test]
    fn exponent_structure() {
        let cfg = AifaConfig::new(bp(2.0, 0.0, 0.6), 20).unwrap();
        let dens = cfg.density().unwrap();
        let s = dens.shift();
        let below = 0.5 * cfg.onset();
        let above = cfg.saturation() + 0.1;
        assert!((dens.exponent(below) - (-1.0 + s)).abs() < 1e-15);
        assert!((dens.exponent(above) - (-1.0 + s - 0.6)).abs() < 1e-15);
    }

    #[test]
    fn closed_form_agreement_beta() {
        let spec = bp(2.0, 1.5, 0.0);
        for k in [2, 10, 100] {
            let dens = AifaConfig::new(spec, k).unwrap().density().unwrap();
            let law = aifa_closed_form(&spec, k).unwrap();
            for i in 1..100 {
                let t = i as f64 / 100.0;
                let a = dens.ln_density(t).unwrap();
                let b = law.ln_pdf(t);
                assert!((a.exp() - b.exp()).abs() <= 1e-8 * b.exp(), "K={k} t={t}");
            }
        }
    }

    #[test]
    fn normalizes_with_discount() {
        for d in [0.3, 0.6] {
            for k in [5, 50] {
                let dens = AifaConfig::new(bp(2.0, 1.0, d), k).unwrap().density().unwrap();
                let p = dens.probability(0.0, 1.0).unwrap();
                assert!((p - 1.0).abs() < 1e-9, "d={d} K={k}: {p}");
            }
        }
    }

    #[test]
    fn table_matches_rejection() {
        let dens = AifaConfig::new(bp(2.0, 0.0, 0.6), 100)
            .unwrap()
            .density()
            .unwrap();
        let table = dens.table().unwrap();
        let mut rng = split(5, 0);
        let ks = dens.validate_table(&table, 10_000, &mut rng).unwrap();
        assert!(ks < 0.02, "ks = {ks}");
    }

    #[test]
    fn table_mean_matches_quadrature() {
        let dens = AifaConfig::new(bp(2.0, 1.0, 0.3), 10)
            .unwrap()
            .density()
            .unwrap();
        let table = dens.table().unwrap();
        let mut rng = split(6, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| table.sample(&mut rng)).collect();
        let m = crate::stats::mean(&xs);
        let se = crate::stats::standard_error(&xs);
        let exact = dens.mean().unwrap();
        assert!((m - exact).abs() < 4.0 * se, "{m} vs {exact} (se {se})");
    }

    #[test]
    fn json_round_trip() {
        let cfg = AifaConfig::new(bp(2.0, 1.0, 0.3), 10)
            .unwrap()
            .with_width(WidthRule::InverseSqrtK)
            .unwrap();
        let s = serde_json::to_string(&cfg).unwrap();
        let back: AifaConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(cfg, back);
        let minimal: AifaConfig = serde_json::from_str(
            r#"{"spec":{"family":"beta","gamma":1,"discount":0,"extras":{"alpha":1}},"K":3}"#,
        )
        .unwrap();
        assert_eq!(minimal.a, 1.0);
        assert_eq!(minimal.indicator, IndicatorKind::Smoothed);
    }
}
