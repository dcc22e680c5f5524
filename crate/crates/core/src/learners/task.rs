use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_dims, dot, Objective};
use crate::losses::{
    argmax_raw, best_competitor, check_binary_label, margin_gradient, scores_raw, sign_label,
    HingeObjective, HingeSpec, Label, MulticlassHingeObjective,
};

/// Prediction problem a linear learner is solving. Fixes how a flat model
/// vector is read, what a label looks like, and which hinge applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Task {
    /// Labels `±1`, model is a single weight vector.
    #[default]
    Binary,
    /// Labels `0..n_classes`, model is `n_classes` rows of weights.
    Multiclass { n_classes: usize },
}

/// Prediction of one model on one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Prediction {
    pub label: Label,
    pub score: f64,
    /// `|H|` for binary, top-two gap for multiclass.
    pub confidence: f64,
}

pub(crate) enum TaskObjective<'a> {
    Binary(HingeObjective<'a>),
    Multiclass(MulticlassHingeObjective<'a>),
}

impl Objective for TaskObjective<'_> {
    fn dim(&self) -> usize {
        match self {
            TaskObjective::Binary(f) => f.dim(),
            TaskObjective::Multiclass(f) => f.dim(),
        }
    }

    fn value(&self, w: &[f64]) -> f64 {
        match self {
            TaskObjective::Binary(f) => f.value(w),
            TaskObjective::Multiclass(f) => f.value(w),
        }
    }

    fn gradient_into(&self, w: &[f64], out: &mut [f64]) {
        match self {
            TaskObjective::Binary(f) => f.gradient_into(w, out),
            TaskObjective::Multiclass(f) => f.gradient_into(w, out),
        }
    }
}

impl Task {
    pub fn model_dim(&self, feature_dim: usize) -> usize {
        match self {
            Task::Binary => feature_dim,
            Task::Multiclass { n_classes } => n_classes * feature_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Task::Multiclass { n_classes } if *n_classes < 2 => Err(Error::usage(format!(
                "multiclass task needs at least 2 classes, got {n_classes}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn check_label(&self, y: Label) -> Result<()> {
        match self {
            Task::Binary => check_binary_label(y).map(|_| ()),
            Task::Multiclass { n_classes } => {
                if y < 0 || y as usize >= *n_classes {
                    Err(Error::usage(format!(
                        "class label {y} out of range for {n_classes} classes"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub(crate) fn check_model(&self, model_dim: usize, feature_dim: usize) -> Result<()> {
        check_dims("model vs features", model_dim, self.model_dim(feature_dim))
    }

    pub(crate) fn predict(&self, w: &[f64], x: &[f64]) -> Prediction {
        match self {
            Task::Binary => {
                let score = dot(w, x);
                Prediction {
                    label: sign_label(score),
                    score,
                    confidence: score.abs(),
                }
            }
            Task::Multiclass { .. } => {
                let scores = scores_raw(w, x);
                let top = argmax_raw(&scores);
                let (_, second) = best_competitor(&scores, top);
                let gap = scores[top] - second;
                Prediction {
                    label: top as Label,
                    score: gap,
                    confidence: gap,
                }
            }
        }
    }

    pub(crate) fn objective<'a>(
        &self,
        spec: HingeSpec,
        x: &'a [f64],
        y: Label,
    ) -> Result<TaskObjective<'a>> {
        self.check_label(y)?;
        Ok(match self {
            Task::Binary => TaskObjective::Binary(HingeObjective::new(spec, x, y)?),
            Task::Multiclass { n_classes } => TaskObjective::Multiclass(
                MulticlassHingeObjective::new(spec, x, y as usize, *n_classes)?,
            ),
        })
    }

    pub(crate) fn loss(&self, spec: HingeSpec, w: &[f64], x: &[f64], y: Label) -> Result<f64> {
        Ok(self.objective(spec, x, y)?.value(w))
    }

    pub(crate) fn loss_gradient(
        &self,
        spec: HingeSpec,
        w: &[f64],
        x: &[f64],
        y: Label,
    ) -> Result<Vec<f64>> {
        Ok(self.objective(spec, x, y)?.gradient(w))
    }

    /// Signed margin of the true label and its gradient: `(y·wᵀx, y·x)` for
    /// binary, `(Ψ, ∇Ψ)` for multiclass.
    pub(crate) fn margin(&self, w: &[f64], x: &[f64], y: Label) -> Result<(f64, Vec<f64>)> {
        self.check_label(y)?;
        Ok(match self {
            Task::Binary => {
                let yf = y as f64;
                (yf * dot(w, x), x.iter().map(|xi| yf * xi).collect())
            }
            Task::Multiclass { .. } => margin_gradient(w, x, y as usize),
        })
    }
}
