//! Teacher-student round: an aggressive model pseudolabels each sample and
//! is corrected only on queried rounds; a conservative model self-adapts to
//! the pseudolabel before deciding, then takes a small mirror step on the
//! best label available.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::task::Task;
use super::{aggressive_stepsize, LabelOracle, QueryRule, RoundOutcome};
use crate::error::{Error, Result};
use crate::geometry::{dot, BregmanGeometry, ModelVector};
use crate::losses::HingeSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OsamdParams {
    /// Query controller σ.
    pub sigma: f64,
    /// Conservative stepsize η.
    pub eta: f64,
    /// Upper bound on the aggressive stepsize (ignored in separable mode).
    pub tau_cap: f64,
    pub inner_iterations: usize,
    /// Rate of the inner descent that approximates the implicit update.
    /// `None` means the conservative stepsize.
    pub inner_rate: Option<f64>,
    /// Uncapped aggressive stepsize.
    pub separable_mode: bool,
    /// Margin the aggressive update drives the teacher towards.
    /// `None` means σ.
    pub aggressive_margin: Option<f64>,
}

impl Default for OsamdParams {
    fn default() -> Self {
        OsamdParams {
            sigma: 0.35,
            eta: 0.01,
            tau_cap: 1.0,
            inner_iterations: 20,
            inner_rate: None,
            separable_mode: false,
            aggressive_margin: Some(1.0),
        }
    }
}

impl OsamdParams {
    pub fn inner_rate(&self) -> f64 {
        self.inner_rate.unwrap_or(self.eta)
    }

    pub fn aggressive_margin(&self) -> f64 {
        self.aggressive_margin.unwrap_or(self.sigma)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, v) in [
            ("sigma", self.sigma),
            ("eta", self.eta),
            ("tau_cap", self.tau_cap),
            ("inner_rate", self.inner_rate()),
            ("aggressive_margin", self.aggressive_margin()),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(format!("{name} must be positive, got {v}"));
            }
        }
        if self.inner_iterations == 0 {
            bad.push("inner_iterations must be positive".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Usage(bad.join("; ")))
        }
    }

    /// Warns when σ exceeds a known separation margin; the label bound only
    /// holds for σ ≤ R.
    pub fn margin_warning(&self, separation_margin: f64) -> Option<String> {
        (self.sigma > separation_margin).then(|| {
            format!(
                "sigma {} exceeds the assumed separation margin {separation_margin}",
                self.sigma
            )
        })
    }
}

/// Aggressive model `theta` and conservative anchor `w_hat`.
#[derive(Debug, Clone, PartialEq)]
pub struct OsamdState {
    pub theta: ModelVector,
    pub w_hat: ModelVector,
    pub geometry: BregmanGeometry,
    pub params: OsamdParams,
    pub loss: HingeSpec,
    pub task: Task,
}

impl OsamdState {
    /// Both models start from `init`, projected into the decision space.
    pub fn new(
        init: ModelVector,
        geometry: BregmanGeometry,
        params: OsamdParams,
        loss: HingeSpec,
        task: Task,
    ) -> Result<Self> {
        params.validate()?;
        geometry.validate()?;
        loss.validate()?;
        task.validate()?;
        let init = geometry.project(&init);
        Ok(OsamdState {
            theta: init.clone(),
            w_hat: init,
            geometry,
            params,
            loss,
            task,
        })
    }
}

/// One round of the self-adaptive learner with an explicit query rule.
/// With `self_adapt = false` the decision is the anchor itself.
pub fn self_adaptive_round<R: Rng + ?Sized>(
    state: &OsamdState,
    x: &[f64],
    oracle: &mut dyn LabelOracle,
    rng: &mut R,
    rule: &QueryRule,
    self_adapt: bool,
) -> Result<(OsamdState, ModelVector, RoundOutcome)> {
    let task = state.task;
    task.check_model(state.theta.dim(), x.len())?;
    let params = &state.params;
    let geometry = &state.geometry;

    // pseudolabel
    let teacher = task.predict(state.theta.as_slice(), x);
    let pseudolabel = teacher.label;

    // self-adaptation
    let decision = if self_adapt {
        let f = task.objective(state.loss, x, pseudolabel)?;
        geometry.proximal_step(
            &state.w_hat,
            &f,
            params.eta,
            params.inner_iterations,
            params.inner_rate(),
        )?
    } else {
        state.w_hat.clone()
    };

    // active query
    let (queried, query_probability) = rule.draw(teacher.confidence, rng)?;
    let mut theta = state.theta.clone();
    let target = if queried {
        let y = oracle.query()?;
        task.check_label(y)?;
        let (margin, grad) = task.margin(state.theta.as_slice(), x, y)?;
        let tau = aggressive_stepsize(params, 1.0, margin, dot(&grad, &grad));
        if tau > 0.0 {
            let step: Vec<f64> = grad.iter().map(|g| -tau * g).collect();
            theta = geometry.mirror_step(&theta, &ModelVector::from_raw(step), 1.0)?;
        }
        y
    } else {
        pseudolabel
    };

    // conservative update, anchored at w_hat with the gradient at the decision
    let grad = task.loss_gradient(state.loss, decision.as_slice(), x, target)?;
    let w_hat = geometry.mirror_step(&state.w_hat, &ModelVector::from_raw(grad), params.eta)?;

    let truth = oracle.reveal_for_metrics()?;
    task.check_label(truth)?;
    let made = task.predict(decision.as_slice(), x);
    let outcome = RoundOutcome {
        decision_score: made.score,
        predicted_label: made.label,
        pseudolabel,
        true_label: truth,
        queried,
        mistake: pseudolabel != truth,
        instantaneous_loss: task.loss(state.loss, decision.as_slice(), x, truth)?,
        query_probability,
    };
    let next = OsamdState {
        theta,
        w_hat,
        ..state.clone()
    };
    Ok((next, decision, outcome))
}

fn margin_rule(state: &OsamdState) -> QueryRule {
    QueryRule::Margin {
        sigma: state.params.sigma,
    }
}

/// Binary OSAMD round: sign pseudolabel, implicit self-adaptation, margin
/// query with probability `σ/(σ+|θᵀx|)`.
pub fn osamd_round<R: Rng + ?Sized>(
    state: &OsamdState,
    x: &[f64],
    oracle: &mut dyn LabelOracle,
    rng: &mut R,
) -> Result<(OsamdState, ModelVector, RoundOutcome)> {
    if state.task != Task::Binary {
        return Err(Error::usage("osamd_round needs a binary task"));
    }
    self_adaptive_round(state, x, oracle, rng, &margin_rule(state), true)
}

/// Multiclass round: argmax pseudolabel, query with `σ/(σ+p)` where `p` is
/// the gap between the two highest teacher scores, aggressive step along `∇Ψ`.
pub fn mosamd_round<R: Rng + ?Sized>(
    state: &OsamdState,
    x: &[f64],
    oracle: &mut dyn LabelOracle,
    rng: &mut R,
) -> Result<(OsamdState, ModelVector, RoundOutcome)> {
    if !matches!(state.task, Task::Multiclass { .. }) {
        return Err(Error::usage("mosamd_round needs a multiclass task"));
    }
    self_adaptive_round(state, x, oracle, rng, &margin_rule(state), true)
}

/// Same queries as OSAMD but no self-adaptation: the decision is `ŵ_t`.
pub fn ablation_no_selfadapt_round<R: Rng + ?Sized>(
    state: &OsamdState,
    x: &[f64],
    oracle: &mut dyn LabelOracle,
    rng: &mut R,
) -> Result<(OsamdState, ModelVector, RoundOutcome)> {
    self_adaptive_round(state, x, oracle, rng, &margin_rule(state), false)
}

/// OSAMD with queries drawn uniformly at `uniform_rate`, ignoring the margin.
pub fn ablation_no_active_round<R: Rng + ?Sized>(
    state: &OsamdState,
    x: &[f64],
    oracle: &mut dyn LabelOracle,
    rng: &mut R,
    uniform_rate: f64,
) -> Result<(OsamdState, ModelVector, RoundOutcome)> {
    let rule = QueryRule::Uniform { rate: uniform_rate };
    rule.validate()?;
    self_adaptive_round(state, x, oracle, rng, &rule, true)
}
