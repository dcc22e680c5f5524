use rand::Rng;

use super::task::Task;
use super::{LabelOracle, QueryRule, RoundOutcome};
use crate::error::{Error, Result};
use crate::geometry::{dot, ModelVector};
use crate::losses::HingeSpec;

/// Passive-aggressive active learner: single model, margin-driven queries,
/// capped passive-aggressive corrections on queried rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PaaState {
    pub w: ModelVector,
    /// Query controller δ in `δ / (δ + |wᵀx|)`.
    pub delta: f64,
    /// Cap on the passive-aggressive stepsize.
    pub c_pa: f64,
    /// Margin the update restores, `1` in the classic scheme.
    pub margin: f64,
    /// Loss reported in the round outcome.
    pub loss: HingeSpec,
    pub task: Task,
}

impl PaaState {
    pub fn new(
        init: ModelVector,
        delta: f64,
        c_pa: f64,
        loss: HingeSpec,
        task: Task,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::usage(format!(
                "PAA delta must be positive, got {delta}"
            )));
        }
        if !(c_pa > 0.0) {
            return Err(Error::usage(format!(
                "PAA cap must be positive, got {c_pa}"
            )));
        }
        loss.validate()?;
        task.validate()?;
        Ok(PaaState {
            w: init,
            delta,
            c_pa,
            margin: 1.0,
            loss,
            task,
        })
    }
}

pub fn paa_round<R: Rng + ?Sized>(
    state: &PaaState,
    x: &[f64],
    oracle: &mut dyn LabelOracle,
    rng: &mut R,
) -> Result<(PaaState, ModelVector, RoundOutcome)> {
    let task = state.task;
    task.check_model(state.w.dim(), x.len())?;
    let made = task.predict(state.w.as_slice(), x);
    let rule = QueryRule::Margin { sigma: state.delta };
    let (queried, query_probability) = rule.draw(made.confidence, rng)?;
    let mut w = state.w.clone();
    if queried {
        let y = oracle.query()?;
        let (margin, grad) = task.margin(state.w.as_slice(), x, y)?;
        let violation = (state.margin - margin).max(0.0);
        let norm_sq = dot(&grad, &grad);
        if violation > 0.0 && norm_sq > 0.0 {
            let tau = (violation / norm_sq).min(state.c_pa);
            let next: Vec<f64> = w
                .as_slice()
                .iter()
                .zip(&grad)
                .map(|(wi, gi)| wi + tau * gi)
                .collect();
            w = ModelVector::from_raw(next);
        }
    }
    let truth = oracle.reveal_for_metrics()?;
    let outcome = RoundOutcome {
        decision_score: made.score,
        predicted_label: made.label,
        pseudolabel: made.label,
        true_label: truth,
        queried,
        mistake: made.label != truth,
        instantaneous_loss: task.loss(state.loss, state.w.as_slice(), x, truth)?,
        query_probability,
    };
    let decision = state.w.clone();
    Ok((PaaState { w, ..state.clone() }, decision, outcome))
}
