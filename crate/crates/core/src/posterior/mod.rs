//! Partition functions, Gibbs and Bayes posteriors over a parameter grid, rate functions and
//! the concentration diagnostics built on them. All posterior arithmetic stays in the natural
//! log domain until masses are formed.

mod diagnostics;
mod grid;
mod partition;
mod rates;

pub use diagnostics::{
    concentration_on, concentration_report, neighborhood, rate_consistency, sandwich_check, ConcentrationReport,
    ConcentrationRow, RateConsistency, SandwichReport, LOG_TOL, SANDWICH_EXHAUSTIVE_MAX,
};
pub use grid::{
    bayes_posterior_direct, bayes_posterior_hidden, direct_gibbs_posterior, gibbs_posterior, posterior_from_evaluator,
    PosteriorGrid,
};
pub use partition::{
    direct_loss, log_partition_scaled, log_partition_theta, DirectLoss, HiddenEvaluator, PartitionEvaluator,
};
pub use rates::{
    direct_partition_rate, rate_closed_form_direct, rate_estimate, rate_table, replicate_seeds, theta_min,
    RateEstimate, RateRow, RateTable, THETA_MIN_EPS_FLOOR,
};
