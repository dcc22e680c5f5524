//! Expected losses, the per-round comparator, dynamic regret and run
//! summaries.

mod aggregate;
mod comparator;
mod expected;
mod regret;

pub use aggregate::{
    aggregate_runs, mean_ci, AggregateSummary, MeanCi, RunRecord, RunSummary, StepRecord,
};
pub use comparator::{
    comparator_oracle, rotate_model, ComparatorOracle, ComparatorResult, ComparatorSeries,
    OracleBudget,
};
pub use expected::{expected_hinge_gaussian, mc_expected_loss, normal_cdf, normal_pdf};
pub use regret::dynamic_regret;
