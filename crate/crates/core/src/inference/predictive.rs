//! Held-out predictive likelihood and chain driving.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gibbs::{gibbs_sweep, GibbsState, StateSummary};
use super::model::{LinearGaussianModel, Matrix, PriorKind};
use crate::error::{Error, Result};
use crate::rng::normal;
use crate::special::log_sum_exp;

/// Locations, noise precision and held-out latent features from one posterior draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveSample {
    psi: Matrix,
    gamma_e: f64,
    x: Matrix<bool>,
    w: Matrix,
}

impl PredictiveSample {
    pub fn new(psi: Matrix, gamma_e: f64, x: Matrix<bool>, w: Matrix) -> Result<Self> {
        if x.cols() != psi.rows() || w.cols() != psi.rows() || w.rows() != x.rows() {
            return Err(Error::Dimension(alloc::format!(
                "x {}x{}, w {}x{} and {} locations do not agree",
                x.rows(),
                x.cols(),
                w.rows(),
                w.cols(),
                psi.rows()
            )));
        }
        if !(gamma_e > 0.0 && gamma_e.is_finite()) {
            return Err(Error::Domain {
                what: "gamma_e",
                value: gamma_e,
                reason: "must be positive and finite",
            });
        }
        Ok(Self { psi, gamma_e, x, w })
    }

    pub fn rows(&self) -> usize {
        self.x.rows()
    }

    pub fn gamma_e(&self) -> f64 {
        self.gamma_e
    }

    pub fn reconstruction(&self, n: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.psi.cols()];
        for k in 0..self.psi.rows() {
            if self.x[(n, k)] {
                let wk = self.w[(n, k)];
                for (o, p) in out.iter_mut().zip(self.psi.row(k)) {
                    *o += wk * p;
                }
            }
        }
        out
    }

    fn ln_likelihood(&self, n: usize, y: &[f64]) -> f64 {
        let d = y.len() as f64;
        let ss: f64 = self
            .reconstruction(n)
            .iter()
            .zip(y)
            .map(|(r, v)| (v - r) * (v - r))
            .sum();
        0.5 * d * (self.gamma_e / (2.0 * PI)).ln() - 0.5 * self.gamma_e * ss
    }
}

/// Draws latent features for held-out rows given the other variables of
/// `state`: prior draws followed by `sweeps` feature updates on the held-out rows.
pub fn impute_heldout<R: Rng + ?Sized>(
    model: &LinearGaussianModel,
    state: &GibbsState,
    heldout: &Matrix,
    sweeps: usize,
    rng: &mut R,
) -> Result<PredictiveSample> {
    model.check_data(heldout)?;
    let m = heldout.rows();
    let k = state.k();
    let x = Matrix::from_fn(m, k, |_, j| rng.random::<f64>() < state.tau()[j]);
    let sd = 1.0 / state.gamma_w().sqrt();
    let w = Matrix::from_fn(m, k, |_, _| sd * normal(rng));
    let mut local = state.with_rows(x, w);
    for _ in 0..sweeps {
        local.update_rows(heldout, 0..m, rng)?;
    }
    PredictiveSample::new(local.psi().clone(), local.gamma_e(), local.x().clone(), local.w().clone())
}

/// Mean over held-out rows of `ln (1/S Σ_s N(y_n; recon_s(n), γ_e,s⁻¹ I))`.
pub fn predictive_log_likelihood(samples: &[PredictiveSample], heldout: &Matrix) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("posterior samples"));
    }
    if heldout.rows() == 0 {
        return Err(Error::Empty("held-out rows"));
    }
    if let Some(s) = samples.iter().find(|s| s.rows() != heldout.rows() || s.psi.cols() != heldout.cols()) {
        return Err(Error::Dimension(alloc::format!(
            "sample covers {}x{}, held-out data is {}x{}",
            s.rows(),
            s.psi.cols(),
            heldout.rows(),
            heldout.cols()
        )));
    }
    let ln_s = (samples.len() as f64).ln();
    let mut ln_terms = alloc::vec![0.0; samples.len()];
    let mut total = 0.0;
    for n in 0..heldout.rows() {
        for (t, s) in ln_terms.iter_mut().zip(samples) {
            *t = s.ln_likelihood(n, heldout.row(n));
        }
        total += log_sum_exp(&ln_terms) - ln_s;
    }
    Ok(total / heldout.rows() as f64)
}

/// Sweep counts for one chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub sweeps: usize,
    pub burnin: usize,
    /// Keep one predictive sample every `thin` sweeps after burn-in.
    #[serde(default = "one")]
    pub thin: usize,
    /// Feature sweeps used to impute each held-out sample.
    #[serde(default = "ten")]
    pub impute_sweeps: usize,
}

fn one() -> usize {
    1
}

fn ten() -> usize {
    10
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.thin == 0 {
            return Err(Error::InvalidParameter {
                name: "sweeps",
                value: 0.0,
                reason: "sweeps and thin must be at least 1",
            });
        }
        if self.burnin >= self.sweeps {
            return Err(Error::InvalidParameter {
                name: "burnin",
                value: self.burnin as f64,
                reason: "must be smaller than sweeps",
            });
        }
        Ok(())
    }
}

/// One row of a chain trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub sweep: usize,
    pub summary: StateSummary,
    pub joint_log_density: f64,
    pub degenerate_tau: usize,
}

impl TraceRow {
    /// `(name, value)` pairs in a fixed order.
    pub fn stats(&self) -> [(&'static str, f64); 7] {
        [
            ("active_total", self.summary.active_total as f64),
            ("active_per_row", self.summary.active_per_row),
            ("mean_tau", self.summary.mean_tau),
            ("gamma_w", self.summary.gamma_w),
            ("gamma_e", self.summary.gamma_e),
            ("joint_log_density", self.joint_log_density),
            ("degenerate_tau", self.degenerate_tau as f64),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub trace: Vec<TraceRow>,
    pub samples: Vec<PredictiveSample>,
    pub final_state: GibbsState,
    /// Average over post-burn-in sweeps of the active features per row.
    pub mean_active_per_row: f64,
}

/// Runs one chain on `data`; with `heldout`, imputes held-out latents at every
/// kept sweep.
pub fn run_chain<R: Rng + ?Sized>(
    model: &LinearGaussianModel,
    kind: PriorKind,
    data: &Matrix,
    heldout: Option<&Matrix>,
    config: ChainConfig,
    rng: &mut R,
) -> Result<ChainOutput> {
    config.validate()?;
    let mut state = GibbsState::initialize(model, kind, data, rng)?;
    let mut trace = Vec::with_capacity(config.sweeps);
    let mut samples = Vec::new();
    let mut active = 0.0;
    for sweep in 1..=config.sweeps {
        let report = gibbs_sweep(model, &mut state, data, rng)?;
        let summary = state.summary();
        trace.push(TraceRow {
            sweep,
            summary,
            joint_log_density: state.joint_log_density(model, data),
            degenerate_tau: report.degenerate_tau,
        });
        if sweep > config.burnin {
            active += summary.active_per_row;
            if let Some(h) = heldout {
                if (sweep - config.burnin) % config.thin == 0 {
                    samples.push(impute_heldout(model, &state, h, config.impute_sweeps, rng)?);
                }
            }
        }
    }
    Ok(ChainOutput {
        trace,
        samples,
        final_state: state,
        mean_active_per_row: active / (config.sweeps - config.burnin) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::split;

    fn sample(gamma_e: f64) -> PredictiveSample {
        let psi = Matrix::from_vec(2, 3, alloc::vec![1.0, 0.0, 0.5, 0.0, 2.0, -1.0]).unwrap();
        let x = Matrix::from_vec(2, 2, alloc::vec![true, false, true, true]).unwrap();
        let w = Matrix::from_vec(2, 2, alloc::vec![2.0, 7.0, -1.0, 0.5]).unwrap();
        PredictiveSample::new(psi, gamma_e, x, w).unwrap()
    }

    #[test]
    fn exact_reconstruction_gives_normalizer() {
        let s = sample(4.0);
        let y = Matrix::from_fn(2, 3, |n, c| s.reconstruction(n)[c]);
        assert_eq!(y.row(0), &[2.0, 0.0, 1.0]);
        let ll = predictive_log_likelihood(&[s], &y).unwrap();
        assert!((ll - 1.5 * (4.0 / (2.0 * PI)).ln()).abs() < 1e-14);
    }

    #[test]
    fn sample_order_is_irrelevant() {
        let y = Matrix::from_fn(2, 3, |n, c| (n + c) as f64 * 0.3);
        let (a, b, c) = (sample(1.0), sample(2.0), sample(0.5));
        let one = predictive_log_likelihood(&[a.clone(), b.clone(), c.clone()], &y).unwrap();
        let two = predictive_log_likelihood(&[c, a, b], &y).unwrap();
        assert!((one - two).abs() < 1e-14);
        assert!(predictive_log_likelihood(&[], &y).is_err());
    }

    #[test]
    fn chain_runs_and_keeps_samples() {
        let m = LinearGaussianModel::new(3, 1.0, 1.0, 4).unwrap();
        let mut rng = split(1, 0);
        let data = Matrix::from_fn(15, 3, |i, j| ((i + 2 * j) as f64).cos());
        let held = data.select_rows(&[0, 1, 2]);
        let cfg = ChainConfig {
            sweeps: 30,
            burnin: 10,
            thin: 5,
            impute_sweeps: 3,
        };
        let out = run_chain(&m, PriorKind::BondessonTfa, &data, Some(&held), cfg, &mut rng).unwrap();
        assert_eq!(out.trace.len(), 30);
        assert_eq!(out.samples.len(), 4);
        assert!(predictive_log_likelihood(&out.samples, &held).unwrap().is_finite());
        assert!(ChainConfig { burnin: 30, ..cfg }.validate().is_err());
    }
}
