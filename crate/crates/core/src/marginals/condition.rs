//! Numerical verification of the four growth and approximation inequalities
//! that drive the total-variation upper bound.
//!
//! 1. `Σ_x M_{n,x} ≤ C₁/(n-1+C₁)`
//! 2. `Σ_{x≥1} h̃(x | 0) ≤ (1/K) C₁/(n-1+C₁)`
//! 3. `Σ_x |h(x | ·) - h̃(x | ·)| ≤ (1/K) C₁/(n-1+C₁)` for every history
//! 4. `Σ_{x≥1} |M_{n,x} - K h̃(x | 0)| ≤ (1/K)(C₄ ln n + C₅)/(n-1+C₁)` once `K ≥ C₂(ln n + C₃)`
//!
//! Every series is summed exactly: each pair of sequences compared here has a
//! monotone ratio in `x`, so the positive part of their difference lives on a
//! finite prefix and the rest follows from closed-form totals.

use alloc::vec::Vec;
use core::f64::consts::E;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::model::{ExpFamilyModel, ModelFamily};
use crate::error::{Error, Result};

/// Hard cap on prefix lengths; reaching it is reported as an error.
const MAX_TERMS: u64 = 50_000_000;

/// Relative tolerance for accepting `value ≤ bound` in floating point.
pub const ACCEPT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    TargetGrowth,
    ApproxGrowth,
    OldLocation,
    NewLocation,
}

impl Inequality {
    pub const ALL: [Inequality; 4] = [
        Inequality::TargetGrowth,
        Inequality::ApproxGrowth,
        Inequality::OldLocation,
        Inequality::NewLocation,
    ];

    pub fn number(&self) -> usize {
        *self as usize + 1
    }
}

/// Constants for the four inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConditionConstants {
    /// The single-constant form `C₁, …, C₅`.
    Canonical {
        c1: f64,
        c2: f64,
        c3: f64,
        c4: f64,
        c5: f64,
    },
    /// The bounds published for the model's family, written out per inequality.
    Preset,
}

impl ConditionConstants {
    /// Right-hand side of inequality `which` at round `n` with `K` atoms.
    pub fn bound(&self, model: &ExpFamilyModel, which: Inequality, n: u64, k: usize) -> f64 {
        let nf = n as f64;
        let kf = k as f64;
        match *self {
            ConditionConstants::Canonical { c1, c4, c5, .. } => {
                let base = c1 / (nf - 1.0 + c1);
                match which {
                    Inequality::TargetGrowth => base,
                    Inequality::ApproxGrowth | Inequality::OldLocation => base / kf,
                    Inequality::NewLocation => (c4 * nf.ln() + c5) / (kf * (nf - 1.0 + c1)),
                }
            }
            ConditionConstants::Preset => preset_bound(model, which, nf, kf),
        }
    }

    /// Whether inequality 4 is required at `(n, K)`.
    pub fn applies(&self, model: &ExpFamilyModel, n: u64, k: usize) -> bool {
        k as f64 >= self.k_floor(model, n)
    }

    pub fn k_floor(&self, model: &ExpFamilyModel, n: u64) -> f64 {
        let nf = n as f64;
        match *self {
            ConditionConstants::Canonical { c2, c3, .. } => c2 * (nf.ln() + c3),
            ConditionConstants::Preset => match model.family() {
                ModelFamily::BetaBernoulli => 0.0,
                ModelFamily::GammaPoisson => model.scale(),
                ModelFamily::BetaNegativeBinomial => {
                    let (r, a) = (model.r(), model.hyper());
                    model.scale() * (3.0 * (r * (nf - 1.0) + a).ln() + 8.0)
                }
            },
        }
    }
}

fn preset_bound(model: &ExpFamilyModel, which: Inequality, n: f64, k: f64) -> f64 {
    let g = model.mass();
    let c = model.scale();
    match model.family() {
        ModelFamily::BetaBernoulli | ModelFamily::GammaPoisson => {
            let offset = n - 1.0 + model.hyper();
            match which {
                Inequality::TargetGrowth => c / offset,
                Inequality::ApproxGrowth => c / (k * offset),
                Inequality::OldLocation => 2.0 * c / (k * offset),
                Inequality::NewLocation => match model.family() {
                    ModelFamily::BetaBernoulli => g * c / (k * offset),
                    _ => (g * c + E * c * c) / (k * offset),
                },
            }
        }
        ModelFamily::BetaNegativeBinomial => {
            let (r, a) = (model.r(), model.hyper());
            let shifted = n - 1.0 + (a - 0.5) / r;
            match which {
                Inequality::TargetGrowth => c / shifted,
                Inequality::ApproxGrowth => 4.0 * c / (k * shifted),
                Inequality::OldLocation => 2.0 * c / (k * (n - 1.0 + a / r)),
                Inequality::NewLocation => {
                    let num = (4.0 * c + 3.0) * (r * n + a + 1.0).ln() + (10.0 + 2.0 * r) * c + 24.0;
                    c / k * num / shifted
                }
            }
        }
    }
}

/// History totals probed by inequality 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryGrid {
    /// Every total `1..=dense` is probed.
    pub dense: u64,
    /// Beyond `dense`, totals grow geometrically by this ratio.
    pub ratio: f64,
    /// Largest total probed for unbounded likelihoods.
    pub max_total: u64,
}

impl Default for HistoryGrid {
    fn default() -> Self {
        Self {
            dense: 32,
            ratio: 1.5,
            max_total: 10_000,
        }
    }
}

impl HistoryGrid {
    /// Totals at round `n`; Bernoulli histories are capped at `n - 1`.
    pub fn totals(&self, model: &ExpFamilyModel, n: u64) -> Vec<u64> {
        let cap = match model.family() {
            ModelFamily::BetaBernoulli => n - 1,
            _ => self.max_total,
        };
        let mut out: Vec<u64> = (1..=self.dense.min(cap)).collect();
        let mut t = self.dense as f64;
        loop {
            t *= self.ratio.max(1.01);
            let v = t.ceil() as u64;
            if v >= cap {
                break;
            }
            out.push(v);
        }
        if cap > self.dense && out.last() != Some(&cap) {
            out.push(cap);
        }
        out
    }
}

/// `Σ_x |h - h̃|` at round `n` for history total `total ≥ 1`.
pub fn old_location_l1(model: &ExpFamilyModel, k: usize, n: u64, total: u64) -> Result<f64> {
    model.target_ln_pmf(n, total, 0)?;
    let a_target = total as f64;
    let a_approx = a_target + model.shift(k);
    // h̃/h increases in x, so h > h̃ exactly on a prefix
    let mut positive = 0.0;
    let mut x = 0u64;
    loop {
        let h = model.ln_pmf_with_shape(n, total, a_target, x).exp();
        let g = model.ln_pmf_with_shape(n, total, a_approx, x).exp();
        if !(h > g) {
            break;
        }
        positive += h - g;
        x += 1;
        if model.max_count().is_some_and(|m| x > m) {
            break;
        }
        if x > MAX_TERMS {
            return Err(Error::Unsupported("prefix of h - h̃ too long"));
        }
    }
    Ok(2.0 * positive)
}

/// `Σ_{x≥1} |M_{n,x} - K h̃(x | 0)|`.
pub fn new_location_l1(model: &ExpFamilyModel, k: usize, n: u64) -> Result<f64> {
    let target_total = model.total_new_atom_rate(n)?;
    let approx_total = k as f64 * model.approx_activation(k, n)?;
    let a = model.shift(k);
    let kf = k as f64;
    // M / (K h̃) decreases in x, so M > K h̃ exactly on a prefix
    let mut positive = 0.0;
    let mut x = 1u64;
    loop {
        let m = model.ln_rate_unchecked(n, x).exp();
        let g = kf * model.ln_pmf_with_shape(n, 0, a, x).exp();
        if !(m > g) {
            break;
        }
        positive += m - g;
        x += 1;
        if model.max_count().is_some_and(|c| x > c) {
            break;
        }
        if x > MAX_TERMS {
            return Err(Error::Unsupported("prefix of M - K h̃ too long"));
        }
    }
    // Σ|a - b| = Σb - Σa + 2 Σ (a - b)^+
    Ok((approx_total - target_total + 2.0 * positive).max(0.0))
}

/// Left-hand side of inequality `which`; inequality 3 takes the worst probed history.
pub fn evaluate(
    model: &ExpFamilyModel,
    which: Inequality,
    n: u64,
    k: usize,
    grid: &HistoryGrid,
) -> Result<f64> {
    match which {
        Inequality::TargetGrowth => model.total_new_atom_rate(n),
        Inequality::ApproxGrowth => model.approx_activation(k, n),
        Inequality::OldLocation => {
            let mut worst = 0.0f64;
            for t in grid.totals(model, n) {
                worst = worst.max(old_location_l1(model, k, n, t)?);
            }
            Ok(worst)
        }
        Inequality::NewLocation => new_location_l1(model, k, n),
    }
}

/// Tightest case of one inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub inequality: Inequality,
    pub n_worst: u64,
    #[serde(rename = "K")]
    pub k: usize,
    /// Smallest `bound - value` over all cases.
    pub slack: f64,
    pub pass: bool,
    /// Number of `(n, K)` cases evaluated.
    pub evaluated: u64,
    /// Cases skipped because `K` was below the floor.
    pub skipped: u64,
}

/// Result of a full check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub inequalities: Vec<InequalityReport>,
    pub pass: bool,
}

/// Checks all four inequalities for `n ≤ n_max` and every `K` in `ks`.
pub fn check_condition_1(
    model: &ExpFamilyModel,
    constants: &ConditionConstants,
    n_max: u64,
    ks: &[usize],
) -> Result<ConditionReport> {
    check_condition_1_with(model, constants, n_max, ks, &HistoryGrid::default())
}

pub fn check_condition_1_with(
    model: &ExpFamilyModel,
    constants: &ConditionConstants,
    n_max: u64,
    ks: &[usize],
    grid: &HistoryGrid,
) -> Result<ConditionReport> {
    if n_max == 0 {
        return Err(Error::Empty("rounds"));
    }
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::InvalidParameter {
            name: "K",
            value: 0.0,
            reason: "need at least one K, each at least 1",
        });
    }
    let mut reports = Vec::new();
    for which in Inequality::ALL {
        let k_values: &[usize] = if which == Inequality::TargetGrowth {
            &ks[..1]
        } else {
            ks
        };
        let mut worst: Option<(f64, u64, usize)> = None;
        let mut pass = true;
        let mut evaluated = 0;
        let mut skipped = 0;
        for &k in k_values {
            for n in 1..=n_max {
                if which == Inequality::NewLocation && !constants.applies(model, n, k) {
                    skipped += 1;
                    continue;
                }
                let value = evaluate(model, which, n, k, grid)?;
                let bound = constants.bound(model, which, n, k);
                evaluated += 1;
                let slack = bound - value;
                pass &= slack >= -ACCEPT_TOLERANCE * bound.abs();
                if worst.is_none_or(|w| slack < w.0) {
                    worst = Some((slack, n, k));
                }
            }
        }
        let (slack, n_worst, k) = worst.unwrap_or((f64::INFINITY, 0, ks[0]));
        reports.push(InequalityReport {
            inequality: which,
            n_worst,
            k,
            slack,
            pass,
            evaluated,
            skipped,
        });
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok(ConditionReport {
        inequalities: reports,
        pass,
    })
}
