use rand::Rng;
use serde::{Deserialize, Serialize};

use super::omd::{omd_round, OmdState};
use super::osamd::{self_adaptive_round, OsamdParams, OsamdState};
use super::paa::{paa_round, PaaState};
use super::task::Task;
use super::{LabelOracle, QueryRule, RoundOutcome};
use crate::error::{Error, Result};
use crate::geometry::{BregmanGeometry, ModelVector};
use crate::losses::HingeSpec;

/// Learner description as it appears in an experiment configuration.
///
/// Rates left unset are filled in by the harness: uniform query rates from
/// the realized query fraction of the reference OSAMD run, PAA's δ and cap
/// from the reference OSAMD parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LearnerKind {
    /// Self-adaptive teacher-student learner (binary or multiclass).
    Osamd {
        #[serde(default)]
        params: OsamdParams,
    },
    /// OSAMD queries, decision without self-adaptation.
    NoSelfAdapt {
        #[serde(default)]
        params: OsamdParams,
    },
    /// OSAMD with uniformly drawn queries.
    NoActive {
        #[serde(default)]
        params: OsamdParams,
        #[serde(default)]
        uniform_rate: Option<f64>,
    },
    /// Mirror descent on every label.
    OmdAll {
        #[serde(default = "default_eta")]
        eta: f64,
    },
    /// Mirror descent on uniformly sampled labels.
    OmdPartial {
        #[serde(default = "default_eta")]
        eta: f64,
        #[serde(default)]
        uniform_rate: Option<f64>,
    },
    /// Passive-aggressive active learning.
    Paa {
        #[serde(default)]
        delta: Option<f64>,
        #[serde(default)]
        c_pa: Option<f64>,
    },
}

fn default_eta() -> f64 {
    OsamdParams::default().eta
}

/// Shared inputs for turning a [`LearnerKind`] into a running [`Learner`].
#[derive(Debug, Clone)]
pub struct BuildContext {
    pub geometry: BregmanGeometry,
    pub loss: HingeSpec,
    pub task: Task,
    /// Parameters of the OSAMD learner that budgets are matched against.
    pub reference: OsamdParams,
    /// Realized query fraction of the reference run, when known.
    pub matched_rate: Option<f64>,
}

impl LearnerKind {
    pub fn params(&self) -> Option<&OsamdParams> {
        match self {
            LearnerKind::Osamd { params }
            | LearnerKind::NoSelfAdapt { params }
            | LearnerKind::NoActive { params, .. } => Some(params),
            _ => None,
        }
    }

    /// Whether building this learner needs the reference run's query rate.
    pub fn needs_matched_rate(&self) -> bool {
        matches!(
            self,
            LearnerKind::NoActive {
                uniform_rate: None,
                ..
            } | LearnerKind::OmdPartial {
                uniform_rate: None,
                ..
            }
        )
    }

    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if let Some(p) = self.params() {
            if let Err(e) = p.validate() {
                problems.push(e.to_string());
            }
        }
        let rate = match self {
            LearnerKind::NoActive { uniform_rate, .. }
            | LearnerKind::OmdPartial { uniform_rate, .. } => *uniform_rate,
            _ => None,
        };
        if let Some(r) = rate {
            if !(0.0..=1.0).contains(&r) {
                problems.push(format!("uniform_rate must lie in [0, 1], got {r}"));
            }
        }
        match self {
            LearnerKind::OmdAll { eta } | LearnerKind::OmdPartial { eta, .. } if !(*eta > 0.0) => {
                problems.push(format!("eta must be positive, got {eta}"));
            }
            LearnerKind::Paa { delta, c_pa } => {
                if delta.is_some_and(|d| !(d > 0.0)) {
                    problems.push("PAA delta must be positive".to_string());
                }
                if c_pa.is_some_and(|c| !(c > 0.0)) {
                    problems.push("PAA c_pa must be positive".to_string());
                }
            }
            _ => {}
        }
        problems
    }

    pub fn build(&self, init: ModelVector, ctx: &BuildContext) -> Result<Learner> {
        let matched = || {
            ctx.matched_rate.ok_or_else(|| {
                Error::usage("uniform rate not set and no reference query rate available")
            })
        };
        let osamd = |params: &OsamdParams| {
            OsamdState::new(init.clone(), ctx.geometry, *params, ctx.loss, ctx.task)
        };
        Ok(match self {
            LearnerKind::Osamd { params } => Learner::SelfAdaptive {
                state: osamd(params)?,
                rule: QueryRule::Margin {
                    sigma: params.sigma,
                },
                self_adapt: true,
            },
            LearnerKind::NoSelfAdapt { params } => Learner::SelfAdaptive {
                state: osamd(params)?,
                rule: QueryRule::Margin {
                    sigma: params.sigma,
                },
                self_adapt: false,
            },
            LearnerKind::NoActive {
                params,
                uniform_rate,
            } => Learner::SelfAdaptive {
                state: osamd(params)?,
                rule: QueryRule::Uniform {
                    rate: uniform_rate.map_or_else(matched, Ok)?,
                },
                self_adapt: true,
            },
            LearnerKind::OmdAll { eta } => Learner::Omd {
                state: OmdState::new(init, ctx.geometry, *eta, ctx.loss, ctx.task)?,
                rule: QueryRule::Always,
            },
            LearnerKind::OmdPartial { eta, uniform_rate } => Learner::Omd {
                state: OmdState::new(init, ctx.geometry, *eta, ctx.loss, ctx.task)?,
                rule: QueryRule::Uniform {
                    rate: uniform_rate.map_or_else(matched, Ok)?,
                },
            },
            LearnerKind::Paa { delta, c_pa } => Learner::Paa {
                state: PaaState::new(
                    init,
                    delta.unwrap_or(ctx.reference.sigma),
                    c_pa.unwrap_or(ctx.reference.tau_cap),
                    ctx.loss,
                    ctx.task,
                )?,
            },
        })
    }
}

/// A running learner of any kind.
#[derive(Debug, Clone)]
pub enum Learner {
    SelfAdaptive {
        state: OsamdState,
        rule: QueryRule,
        self_adapt: bool,
    },
    Omd {
        state: OmdState,
        rule: QueryRule,
    },
    Paa {
        state: PaaState,
    },
}

impl Learner {
    /// Plays one round, returning the decision model and the outcome.
    pub fn round<R: Rng + ?Sized>(
        &mut self,
        x: &[f64],
        oracle: &mut dyn LabelOracle,
        rng: &mut R,
    ) -> Result<(ModelVector, RoundOutcome)> {
        match self {
            Learner::SelfAdaptive {
                state,
                rule,
                self_adapt,
            } => {
                let (next, decision, outcome) =
                    self_adaptive_round(state, x, oracle, rng, rule, *self_adapt)?;
                *state = next;
                Ok((decision, outcome))
            }
            Learner::Omd { state, rule } => {
                let (next, decision, outcome) = omd_round(state, x, oracle, rule, rng)?;
                *state = next;
                Ok((decision, outcome))
            }
            Learner::Paa { state } => {
                let (next, decision, outcome) = paa_round(state, x, oracle, rng)?;
                *state = next;
                Ok((decision, outcome))
            }
        }
    }
}
