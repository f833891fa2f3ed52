//! Seeded experiments and their reports.
//!
//! Every trial draws from its own named stream of the root seed, so a report
//! is reproduced bit for bit by re-running with the same configuration.

mod experiments;
pub mod registry;
mod report;

pub use experiments::{
    adaptive_compression_experiment, generic_learner_experiment, generic_learner_sample_size, noise_labels,
    noisy_majority_min_eps, ols, overfit_experiment, threshold_experiment, threshold_task, tightness_experiment,
    GENERIC_N_LIMIT, OVERFIT_TRIALS, THRESHOLD_GRID,
};
pub use report::{canonical_json, format_f64, ExperimentReport};
