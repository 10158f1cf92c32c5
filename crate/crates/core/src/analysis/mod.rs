//! Total-variation tooling, growth functions, closed-form bounds and
//! partition probabilities.

mod bounds;
mod eppf;
mod tv;

pub use bounds::{
    binom_poisson_lower_constant, bondesson_tfa_bound, chernoff_lower, chernoff_upper,
    dp_fsd_two_sample_gap, growth_function, growth_function_lower, lecam_upper, tsb_dp_bound,
};
pub use eppf::{
    eppf, eppf_monte_carlo_all, fsd_convergence, sequence_probability, EppfEstimate, EppfGap,
    EppfMethod, EppfSource, NormalizedWeights, PartitionComposition,
};
pub use tv::{
    poisson_tail_lower, poisson_tail_upper, tv_binom_poisson, tv_exact, DiscreteDistribution,
    TotalVariation,
};
