//! Experiment configuration, seeded orchestration and result files.

mod config;
mod emit;
mod run;

pub use config::{
    default_learners, label_flip_config, ExperimentConfig, MetricsConfig, NamedLearner,
    OutputConfig,
};
pub use emit::{
    emit_results, run_csv_name, write_comparator_csv, write_run_csv, SummaryEntry, SummaryFile,
    PER_STEP_HEADER,
};
pub use run::{
    comparator_series, derive_seed, learner_seed, realize_repeat, round_sampler, run_experiment,
    run_learner, stream_seed, ExperimentOutput, LearnerSummary, RunFailure,
};
