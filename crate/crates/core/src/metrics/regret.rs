use super::comparator::ComparatorSeries;
use crate::error::{Error, Result};

/// Running `Σ l_s(w_s) − Σ l_s(w_s*)` for `s ≤ t`.
pub fn dynamic_regret(expected_losses: &[f64], comparator: &ComparatorSeries) -> Result<Vec<f64>> {
    if comparator.per_step_optimal.len() != comparator.per_step_optimal_value.len() {
        return Err(Error::usage(format!(
            "comparator series is ragged: {} models, {} values",
            comparator.per_step_optimal.len(),
            comparator.per_step_optimal_value.len()
        )));
    }
    if expected_losses.len() != comparator.len() {
        return Err(Error::usage(format!(
            "dynamic_regret: {} losses vs {} comparator steps",
            expected_losses.len(),
            comparator.len()
        )));
    }
    let mut learner = 0.0;
    let mut best = 0.0;
    Ok(expected_losses
        .iter()
        .zip(&comparator.per_step_optimal_value)
        .map(|(l, c)| {
            learner += l;
            best += c;
            learner - best
        })
        .collect())
}
