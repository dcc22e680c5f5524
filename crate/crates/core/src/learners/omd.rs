use rand::Rng;

use super::task::Task;
use super::{LabelOracle, QueryRule, RoundOutcome};
use crate::error::{Error, Result};
use crate::geometry::{BregmanGeometry, ModelVector};
use crate::losses::HingeSpec;

/// Plain online mirror descent on the hinge loss.
#[derive(Debug, Clone, PartialEq)]
pub struct OmdState {
    pub w: ModelVector,
    pub geometry: BregmanGeometry,
    pub eta: f64,
    pub loss: HingeSpec,
    pub task: Task,
}

impl OmdState {
    pub fn new(
        init: ModelVector,
        geometry: BregmanGeometry,
        eta: f64,
        loss: HingeSpec,
        task: Task,
    ) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::usage(format!("eta must be positive, got {eta}")));
        }
        geometry.validate()?;
        loss.validate()?;
        task.validate()?;
        Ok(OmdState {
            w: geometry.project(&init),
            geometry,
            eta,
            loss,
            task,
        })
    }
}

/// Decides with the current model, then takes one mirror step on the true
/// label whenever `policy` fires.
pub fn omd_round<R: Rng + ?Sized>(
    state: &OmdState,
    x: &[f64],
    oracle: &mut dyn LabelOracle,
    policy: &QueryRule,
    rng: &mut R,
) -> Result<(OmdState, ModelVector, RoundOutcome)> {
    let task = state.task;
    task.check_model(state.w.dim(), x.len())?;
    let made = task.predict(state.w.as_slice(), x);
    let (queried, query_probability) = policy.draw(made.confidence, rng)?;
    let mut w = state.w.clone();
    if queried {
        let y = oracle.query()?;
        let grad = task.loss_gradient(state.loss, state.w.as_slice(), x, y)?;
        w = state
            .geometry
            .mirror_step(&state.w, &ModelVector::from_raw(grad), state.eta)?;
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
    Ok((OmdState { w, ..state.clone() }, decision, outcome))
}
