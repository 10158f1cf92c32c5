//! Marginal processes of exponential-family CRMs and their approximations,
//! feature-allocation simulation, urn schemes and the Condition-1 checker.

mod allocation;
mod condition;
mod model;
mod urn;

pub use allocation::{
    chained_log_probability, class_log_probability, simulate_allocation, AllocationSource,
    FeatureAllocation,
};
pub use condition::{
    check_condition_1, check_condition_1_with, evaluate, new_location_l1, old_location_l1,
    ConditionConstants, ConditionReport, HistoryGrid, Inequality, InequalityReport,
    ACCEPT_TOLERANCE,
};
pub use model::{
    approx_predictive_pmf, target_new_atom_rate, target_predictive_pmf, ExpFamilyModel, ModelFamily,
};
pub use urn::{
    block_counts, dp_urn_probabilities, dp_urn_step, fsd_urn_probabilities, fsd_urn_step,
    pair_coincidence, Urn, UrnLabel, UrnProbabilities,
};
