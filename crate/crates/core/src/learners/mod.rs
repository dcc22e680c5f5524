//! Online learners driven one round at a time.
//!
//! Every learner consumes a feature vector and a [`LabelOracle`], and emits a
//! [`RoundOutcome`]. The oracle separates the two ways a true label can be
//! obtained: [`LabelOracle::query`] is the only route into a learner's update
//! path and counts against the label budget, while
//! [`LabelOracle::reveal_for_metrics`] fills in bookkeeping after the update
//! has been decided.

mod learner;
mod omd;
mod osamd;
mod paa;
mod pretrain;
mod task;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::Label;

pub use learner::{BuildContext, Learner, LearnerKind};
pub use omd::{omd_round, OmdState};
pub use osamd::{
    ablation_no_active_round, ablation_no_selfadapt_round, mosamd_round, osamd_round,
    self_adaptive_round, OsamdParams, OsamdState,
};
pub use paa::{paa_round, PaaState};
pub use pretrain::{pretrain, PretrainSpec};
pub use task::Task;

/// Source of the true label for the current round.
pub trait LabelOracle {
    /// Reveals the label to the learner. Every call is a paid query.
    fn query(&mut self) -> Result<Label>;

    /// Reveals the label for metric bookkeeping only; never feeds an update.
    fn reveal_for_metrics(&mut self) -> Result<Label>;
}

/// Oracle over a known sample label, counting paid queries.
#[derive(Debug, Clone)]
pub struct SampleOracle {
    label: Label,
    queries: usize,
}

impl SampleOracle {
    pub fn new(label: Label) -> Self {
        SampleOracle { label, queries: 0 }
    }

    pub fn queries(&self) -> usize {
        self.queries
    }
}

impl LabelOracle for SampleOracle {
    fn query(&mut self) -> Result<Label> {
        self.queries += 1;
        Ok(self.label)
    }

    fn reveal_for_metrics(&mut self) -> Result<Label> {
        Ok(self.label)
    }
}

/// Everything one online round produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    /// Soft prediction of the decision model (binary: `wᵀx`; multiclass:
    /// gap between the top two class scores).
    pub decision_score: f64,
    pub predicted_label: Label,
    pub pseudolabel: Label,
    pub true_label: Label,
    pub queried: bool,
    /// Pseudolabel disagrees with the true label.
    pub mistake: bool,
    /// Loss of the decision model against the true label.
    pub instantaneous_loss: f64,
    pub query_probability: f64,
}

impl RoundOutcome {
    pub fn correct(&self) -> bool {
        self.predicted_label == self.true_label
    }
}

/// When a learner asks for the label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QueryRule {
    /// `σ / (σ + confidence)`.
    Margin {
        sigma: f64,
    },
    /// Fixed probability, independent of the sample.
    Uniform {
        rate: f64,
    },
    Always,
}

impl QueryRule {
    pub fn probability(&self, confidence: f64) -> Result<f64> {
        match *self {
            QueryRule::Margin { sigma } => query_probability(sigma, confidence),
            QueryRule::Uniform { rate } => Ok(rate),
            QueryRule::Always => Ok(1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            QueryRule::Margin { sigma } if !(sigma > 0.0 && sigma.is_finite()) => Err(
                Error::usage(format!("query controller must be positive, got {sigma}")),
            ),
            QueryRule::Uniform { rate } if !(0.0..=1.0).contains(&rate) => Err(Error::usage(
                format!("uniform query rate must lie in [0, 1], got {rate}"),
            )),
            _ => Ok(()),
        }
    }

    /// Draws the query indicator. Always consumes exactly one uniform so
    /// that learners with different rules stay aligned on a shared seed.
    pub(crate) fn draw<R: rand::Rng + ?Sized>(
        &self,
        confidence: f64,
        rng: &mut R,
    ) -> Result<(bool, f64)> {
        let p = self.probability(confidence)?;
        let u: f64 = rng.random();
        Ok((u < p, p))
    }
}

/// `σ / (σ + confidence)`, the probability of asking for a label.
pub fn query_probability(sigma: f64, confidence: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::usage(format!("sigma must be positive, got {sigma}")));
    }
    if confidence < 0.0 || confidence.is_nan() {
        return Err(Error::usage(format!(
            "confidence must be nonnegative, got {confidence}"
        )));
    }
    Ok(sigma / (sigma + confidence))
}

/// Aggressive stepsize for the teacher model.
///
/// `max{0, m − y·score} / ‖∇H‖²`, capped at `tau_cap` unless the parameters
/// select separable mode. `m` is the aggressive margin (defaults to σ).
pub fn aggressive_stepsize(params: &OsamdParams, y: f64, score: f64, grad_norm_sq: f64) -> f64 {
    let violation = (params.aggressive_margin() - y * score).max(0.0);
    if violation == 0.0 || !(grad_norm_sq > 0.0) {
        return 0.0;
    }
    let tau = violation / grad_norm_sq;
    if params.separable_mode {
        tau
    } else {
        tau.min(params.tau_cap)
    }
}
