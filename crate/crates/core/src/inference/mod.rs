//! Gibbs sampling for the beta–Bernoulli linear-Gaussian feature model under
//! the AIFA and Bondesson truncation priors.

mod geweke;
mod gibbs;
mod model;
mod predictive;
mod synthetic;
mod truncated_beta;

pub use geweke::{geweke_test, GewekeConfig, GewekeReport, GewekeStatistic};
pub use gibbs::{
    aifa_tau_conditional, gibbs_sweep, tfa_tau_conditional_sample, tfa_tau_parameters, BetaParameters,
    GibbsState, JointTerms, StateSummary, SweepReport,
};
pub use model::{GammaPrior, LinearGaussianModel, Matrix, PriorKind};
pub use predictive::{
    impute_heldout, predictive_log_likelihood, run_chain, ChainConfig, ChainOutput, PredictiveSample, TraceRow,
};
pub use synthetic::{generate_synthetic, SyntheticConfig, SyntheticData};
pub use truncated_beta::{sample_truncated_beta, TruncatedDraw, DEGENERATE_WIDTH};
