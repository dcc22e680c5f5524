use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::environments::{LabelFlipConfig, StreamConfig};
use crate::error::{Error, Result};
use crate::geometry::BregmanGeometry;
use crate::learners::{LearnerKind, OsamdParams, PretrainSpec};
use crate::losses::HingeSpec;
use crate::metrics::OracleBudget;

/// A learner entry: a unique name plus its description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedLearner {
    pub name: String,
    #[serde(flatten)]
    pub kind: LearnerKind,
}

impl NamedLearner {
    pub fn new(name: impl Into<String>, kind: LearnerKind) -> Self {
        NamedLearner {
            name: name.into(),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    /// Dynamic regret against the per-round optimum (rotating Gaussian only).
    pub compute_regret: bool,
    /// Draws per round for a Monte Carlo expected loss on streams without a
    /// closed form. `0` leaves the column empty.
    pub mc_fallback_n: usize,
    pub oracle_budget: OracleBudget,
    /// Confidence level of the reported intervals.
    pub confidence: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            compute_regret: true,
            mc_fallback_n: 0,
            oracle_budget: OracleBudget::default(),
            confidence: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub per_step_csv: bool,
    pub summary_json: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("results"),
            per_step_csv: true,
            summary_json: true,
        }
    }
}

/// Everything needed to run one experiment. Defaults describe the rotating
/// Gaussian benchmark with all six learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub base_seed: u64,
    pub repeats: usize,
    /// Overrides the environment's horizon when set.
    pub horizon_t: Option<usize>,
    pub environment: StreamConfig,
    pub loss: HingeSpec,
    pub geometry: BregmanGeometry,
    pub pretrain: PretrainSpec,
    /// Learner whose realized query fraction budget-matched learners reuse.
    /// Defaults to the first `osamd` entry.
    pub reference: Option<String>,
    pub learners: Vec<NamedLearner>,
    pub metrics: MetricsConfig,
    pub output: OutputConfig,
}

pub fn default_learners() -> Vec<NamedLearner> {
    let params = OsamdParams::default();
    vec![
        NamedLearner::new("osamd", LearnerKind::Osamd { params }),
        NamedLearner::new("omd-all", LearnerKind::OmdAll { eta: params.eta }),
        NamedLearner::new(
            "omd-partial",
            LearnerKind::OmdPartial {
                eta: params.eta,
                uniform_rate: None,
            },
        ),
        NamedLearner::new(
            "paa",
            LearnerKind::Paa {
                delta: None,
                c_pa: None,
            },
        ),
        NamedLearner::new("no-self-adapt", LearnerKind::NoSelfAdapt { params }),
        NamedLearner::new(
            "no-active",
            LearnerKind::NoActive {
                params,
                uniform_rate: None,
            },
        ),
    ]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            base_seed: 0,
            repeats: 10,
            horizon_t: None,
            environment: StreamConfig::default(),
            loss: HingeSpec::default().with_unpenalized_bias(),
            geometry: BregmanGeometry::unbounded(),
            pretrain: PretrainSpec::default(),
            reference: None,
            learners: default_learners(),
            metrics: MetricsConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Load {
            path: PathBuf::from("<inline>"),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// Environment with the horizon override applied.
    pub fn resolved_environment(&self) -> StreamConfig {
        let mut env = self.environment.clone();
        if let Some(t) = self.horizon_t {
            env.set_horizon(t);
        }
        env
    }

    /// Applies the horizon override and fills in the reference learner.
    pub fn resolve(mut self) -> Self {
        self.environment = self.resolved_environment();
        self.horizon_t = self.environment.horizon();
        if self.reference.is_none() {
            self.reference = self
                .learners
                .iter()
                .find(|l| matches!(l.kind, LearnerKind::Osamd { .. }))
                .map(|l| l.name.clone());
        }
        self
    }

    pub fn reference_learner(&self) -> Option<&NamedLearner> {
        match &self.reference {
            Some(name) => self.learners.iter().find(|l| &l.name == name),
            None => self
                .learners
                .iter()
                .find(|l| matches!(l.kind, LearnerKind::Osamd { .. })),
        }
    }

    /// Parameters PAA and the budget-matched learners default from.
    pub fn reference_params(&self) -> OsamdParams {
        self.reference_learner()
            .and_then(|l| l.kind.params().copied())
            .unwrap_or_default()
    }

    /// Every problem with the configuration, in one list.
    pub fn problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.repeats == 0 {
            problems.push("repeats must be at least 1".to_string());
        }
        if self.horizon_t == Some(0) {
            problems.push("horizon_t must be positive".to_string());
        }
        let env = self.resolved_environment();
        problems.extend(env.validate());
        if let Err(e) = self.loss.validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.geometry.validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.pretrain.validate() {
            problems.push(e.to_string());
        }
        if self.loss.unpenalized_bias && !augments_bias(&env) {
            problems.push(
                "loss.unpenalized_bias needs an environment that appends a bias coordinate"
                    .to_string(),
            );
        }
        let task = env.task();
        if let Err(e) = task.validate() {
            problems.push(e.to_string());
        }
        if let (PretrainSpec::Fixed { init }, Some(dim)) = (&self.pretrain, feature_dim(&env)) {
            let want = task.model_dim(dim);
            if init.len() != want {
                problems.push(format!(
                    "fixed init has {} coordinates, the model needs {want}",
                    init.len()
                ));
            }
        }
        if let PretrainSpec::Fit { .. } = self.pretrain {
            if pretrain_size(&env) == Some(0) {
                problems.push(
                    "pretraining needs source samples; set n_pretrain or use a fixed init"
                        .to_string(),
                );
            }
        }
        if !(self.metrics.confidence > 0.0 && self.metrics.confidence < 1.0) {
            problems.push(format!(
                "confidence must lie in (0, 1), got {}",
                self.metrics.confidence
            ));
        }
        if self.metrics.mc_fallback_n == 1 {
            problems.push("mc_fallback_n must be 0 or at least 2".to_string());
        }
        if self.learners.is_empty() {
            problems.push("at least one learner is required".to_string());
        }
        let mut seen = HashSet::new();
        for l in &self.learners {
            if l.name.is_empty()
                || !l
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            {
                problems.push(format!(
                    "learner name {:?} must be non-empty and use only letters, digits, '-', '_' or '.'",
                    l.name
                ));
            }
            if !seen.insert(l.name.as_str()) {
                problems.push(format!("duplicate learner name {:?}", l.name));
            }
            for p in l.kind.validate() {
                problems.push(format!("learner {}: {p}", l.name));
            }
        }
        let matched: Vec<&str> = self
            .learners
            .iter()
            .filter(|l| l.kind.needs_matched_rate())
            .map(|l| l.name.as_str())
            .collect();
        match (&self.reference, self.reference_learner()) {
            (Some(name), None) => {
                problems.push(format!("reference learner {name:?} is not configured"))
            }
            (_, Some(r)) if r.kind.needs_matched_rate() => problems.push(format!(
                "reference learner {:?} cannot itself use a matched rate",
                r.name
            )),
            (None, None) if !matched.is_empty() => problems.push(format!(
                "learners {} need a matched query rate but no osamd learner is configured",
                matched.join(", ")
            )),
            _ => {}
        }
        problems
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

fn feature_dim(env: &StreamConfig) -> Option<usize> {
    match env {
        StreamConfig::RotatingGaussian(c) => Some(c.feature_dim()),
        StreamConfig::RotatingMulticlass(c) => Some(2 + usize::from(c.augment_bias)),
        StreamConfig::LabelFlip(_) => Some(2),
        StreamConfig::Csv(_) => None,
    }
}

fn augments_bias(env: &StreamConfig) -> bool {
    match env {
        StreamConfig::RotatingGaussian(c) => c.augment_bias,
        StreamConfig::RotatingMulticlass(c) => c.augment_bias,
        StreamConfig::LabelFlip(_) => false,
        StreamConfig::Csv(c) => c.augment_bias,
    }
}

fn pretrain_size(env: &StreamConfig) -> Option<usize> {
    match env {
        StreamConfig::RotatingGaussian(c) => Some(c.n_pretrain),
        StreamConfig::RotatingMulticlass(c) => Some(c.n_pretrain),
        StreamConfig::LabelFlip(c) => Some(c.n_pretrain),
        StreamConfig::Csv(c) => Some(c.n_pretrain),
    }
}

/// Label-flip stream in the unit ball: a self-trainer that never asks for
/// labels against OSAMD with a small query controller.
pub fn label_flip_config() -> ExperimentConfig {
    let params = OsamdParams {
        sigma: 0.1,
        eta: 0.1,
        tau_cap: 1.0,
        inner_iterations: 20,
        inner_rate: Some(1.0),
        separable_mode: false,
        aggressive_margin: Some(1.0),
    };
    ExperimentConfig {
        base_seed: 0,
        repeats: 10,
        horizon_t: None,
        environment: StreamConfig::LabelFlip(LabelFlipConfig::default()),
        loss: HingeSpec::new(1.0, 0.0).expect("valid hinge"),
        geometry: BregmanGeometry {
            radius: Some(1.0),
            ..BregmanGeometry::unbounded()
        },
        pretrain: PretrainSpec::Fixed {
            init: vec![-1.0, 0.0],
        },
        reference: Some("osamd".to_string()),
        learners: vec![
            NamedLearner::new("osamd", LearnerKind::Osamd { params }),
            NamedLearner::new(
                "frozen-self-trainer",
                LearnerKind::NoActive {
                    params,
                    uniform_rate: Some(0.0),
                },
            ),
        ],
        metrics: MetricsConfig {
            compute_regret: false,
            ..MetricsConfig::default()
        },
        output: OutputConfig {
            dir: PathBuf::from("results/label-flip"),
            ..OutputConfig::default()
        },
    }
}
