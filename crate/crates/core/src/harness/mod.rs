//! Experiment harness: configuration, training runs with CSV output,
//! learning-curve summaries and the gradient-check suite.

pub mod config;
pub mod experiment;
pub mod gradcheck;
pub mod summary;

pub use config::{parse_config, ExperimentId, ExperimentSpec, Overrides, DEFAULT_EPISODES};
pub use experiment::{
    episodes_to_threshold, final_window, format_record, reward_identity_holds, run_experiment, ExperimentResult,
    FinalWindow,
};
pub use gradcheck::{run_case, run_suite, GradCase, GradCheckOutcome};
pub use summary::{summarize, Bucket, CSV_HEADER};
