//! Joint-distribution test of the Gibbs sampler: marginal-conditional draws
//! against successive-conditional draws.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gibbs::{gibbs_sweep, GibbsState};
use super::model::{LinearGaussianModel, PriorKind};
use crate::error::{Error, Result};
use crate::stats::{batch_means_error, mean, standard_error};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GewekeConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub draws: usize,
    /// Gibbs sweeps between data regenerations in the successive chain.
    pub sweeps_per_draw: usize,
    /// Batches for the successive chain's standard errors.
    pub batches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GewekeStatistic {
    pub name: String,
    pub marginal_mean: f64,
    pub marginal_se: f64,
    pub successive_mean: f64,
    pub successive_se: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GewekeReport {
    pub statistics: Vec<GewekeStatistic>,
    /// Every `|z| <= threshold`.
    pub pass: bool,
}

const NAMES: [&str; 6] = ["sum_x", "mean_tau", "gamma_e", "sum_x_sq", "mean_tau_sq", "gamma_e_sq"];

fn functionals(s: &GibbsState) -> [f64; 6] {
    let sum_x = s.column_sums().iter().sum::<usize>() as f64;
    let mean_tau = s.tau().iter().sum::<f64>() / s.k() as f64;
    let ge = s.gamma_e();
    [sum_x, mean_tau, ge, sum_x * sum_x, mean_tau * mean_tau, ge * ge]
}

/// Compares first and second moments of `(Σx, mean τ, γ_e)` between
/// independent prior draws and a chain that alternates data regeneration
/// with Gibbs sweeps. Standard errors of the chain use batch means.
pub fn geweke_test<R: Rng + ?Sized>(
    model: &LinearGaussianModel,
    kind: PriorKind,
    config: GewekeConfig,
    threshold: f64,
    rng: &mut R,
) -> Result<GewekeReport> {
    if config.draws < 2 || config.batches < 2 || config.batches > config.draws || config.sweeps_per_draw == 0 {
        return Err(Error::InvalidParameter {
            name: "draws",
            value: config.draws as f64,
            reason: "need draws >= batches >= 2 and at least one sweep per draw",
        });
    }
    let mut marginal: [Vec<f64>; 6] = Default::default();
    for _ in 0..config.draws {
        let s = GibbsState::sample_prior(model, kind, config.n, rng)?;
        for (v, f) in marginal.iter_mut().zip(functionals(&s)) {
            v.push(f);
        }
    }
    let mut successive: [Vec<f64>; 6] = Default::default();
    let mut state = GibbsState::sample_prior(model, kind, config.n, rng)?;
    for _ in 0..config.draws {
        let data = state.generate_data(rng);
        for _ in 0..config.sweeps_per_draw {
            gibbs_sweep(model, &mut state, &data, rng)?;
        }
        for (v, f) in successive.iter_mut().zip(functionals(&state)) {
            v.push(f);
        }
    }
    let statistics: Vec<GewekeStatistic> = NAMES
        .iter()
        .zip(marginal.iter().zip(&successive))
        .map(|(name, (m, s))| {
            let (mm, ms) = (mean(m), mean(s));
            let (em, es) = (standard_error(m), batch_means_error(s, config.batches));
            GewekeStatistic {
                name: String::from(*name),
                marginal_mean: mm,
                marginal_se: em,
                successive_mean: ms,
                successive_se: es,
                z: (mm - ms) / (em * em + es * es).sqrt(),
            }
        })
        .collect();
    let pass = statistics.iter().all(|s| s.z.abs() <= threshold);
    Ok(GewekeReport { statistics, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::GammaPrior;
    use crate::rng::split;

    #[test]
    fn small_run_is_consistent() {
        let prior = GammaPrior { shape: 3.0, rate: 3.0 };
        let m = LinearGaussianModel::new(2, 1.0, 1.0, 3)
            .unwrap()
            .with_precision_priors(prior, prior)
            .unwrap();
        let cfg = GewekeConfig {
            n: 5,
            draws: 2000,
            sweeps_per_draw: 2,
            batches: 20,
        };
        let r = geweke_test(&m, PriorKind::Aifa, cfg, 4.0, &mut split(11, 0)).unwrap();
        assert_eq!(r.statistics.len(), 6);
        assert!(r.pass, "{:?}", r.statistics);
    }
}
