//! Hinge losses and linear soft predictions.
//!
//! Binary: `f(w; x, y) = max{0, m − y·wᵀx} + C·‖w‖²`. With
//! `unpenalized_bias` the last coordinate of each row is an augmented bias
//! and is left out of the penalty.
//!
//! Multiclass models are stored as one flattened [`ModelVector`] holding `k`
//! rows of length `d` (row-major), so the geometry operations apply to them
//! unchanged. The multiclass loss is the margin-rescaled hinge
//! `max{0, m − Ψ} + C·Σ‖w_s‖²` with `Ψ = H^y − max_{s≠y} H^s`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_dims, dot, ModelVector, Objective};

/// Labels are `±1` for binary streams and class indices `0..k` otherwise.
pub type Label = i64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HingeSpec {
    pub margin_target: f64,
    pub penalty_c: f64,
    #[serde(default)]
    pub unpenalized_bias: bool,
}

impl Default for HingeSpec {
    fn default() -> Self {
        HingeSpec {
            margin_target: 1.0,
            penalty_c: 0.2,
            unpenalized_bias: false,
        }
    }
}

impl HingeSpec {
    pub fn new(margin_target: f64, penalty_c: f64) -> Result<Self> {
        let spec = HingeSpec {
            margin_target,
            penalty_c,
            unpenalized_bias: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.margin_target > 0.0 && self.margin_target.is_finite()) {
            return Err(Error::usage(format!(
                "hinge margin target must be positive, got {}",
                self.margin_target
            )));
        }
        if !(self.penalty_c >= 0.0 && self.penalty_c.is_finite()) {
            return Err(Error::usage(format!(
                "hinge penalty must be nonnegative, got {}",
                self.penalty_c
            )));
        }
        Ok(())
    }

    /// Same spec with the bias left out of the penalty.
    pub fn with_unpenalized_bias(self) -> Self {
        HingeSpec {
            unpenalized_bias: true,
            ..self
        }
    }

    /// `C·‖w‖²` over rows of length `row_len`.
    pub(crate) fn penalty_raw(&self, w: &[f64], row_len: usize) -> f64 {
        if self.penalty_c == 0.0 {
            return 0.0;
        }
        if !self.unpenalized_bias {
            return self.penalty_c * dot(w, w);
        }
        let sq: f64 = w
            .chunks(row_len)
            .map(|row| row[..row.len() - 1].iter().map(|v| v * v).sum::<f64>())
            .sum();
        self.penalty_c * sq
    }

    /// Writes the penalty gradient `2C·w` (bias entries zeroed if exempt).
    pub(crate) fn penalty_gradient_into(&self, w: &[f64], row_len: usize, out: &mut [f64]) {
        let two_c = 2.0 * self.penalty_c;
        for (i, (o, wi)) in out.iter_mut().zip(w).enumerate() {
            *o = if self.unpenalized_bias && (i + 1) % row_len == 0 {
                0.0
            } else {
                two_c * wi
            };
        }
    }

    fn hinge_raw(&self, w: &[f64], x: &[f64], y: f64) -> f64 {
        (self.margin_target - y * dot(w, x)).max(0.0) + self.penalty_raw(w, x.len())
    }

    fn gradient_raw(&self, w: &[f64], x: &[f64], y: f64, out: &mut [f64]) {
        self.penalty_gradient_into(w, x.len(), out);
        if y * dot(w, x) < self.margin_target {
            for (o, xi) in out.iter_mut().zip(x) {
                *o -= y * xi;
            }
        }
    }
}

pub fn check_binary_label(y: Label) -> Result<f64> {
    match y {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        other => Err(Error::usage(format!(
            "binary label must be -1 or +1, got {other}"
        ))),
    }
}

/// `sign` with ties going to `+1`.
pub fn sign_label(score: f64) -> Label {
    if score >= 0.0 {
        1
    } else {
        -1
    }
}

/// Soft prediction `H(w; x) = wᵀx`.
pub fn linear_score(w: &ModelVector, x: &[f64]) -> Result<f64> {
    check_dims("linear_score", w.dim(), x.len())?;
    Ok(dot(w.as_slice(), x))
}

pub fn hinge_value(spec: &HingeSpec, w: &ModelVector, x: &[f64], y: Label) -> Result<f64> {
    check_dims("hinge_value", w.dim(), x.len())?;
    let y = check_binary_label(y)?;
    Ok(spec.hinge_raw(w.as_slice(), x, y))
}

/// Subgradient of [`hinge_value`]; at the kink the zero-hinge branch is taken.
pub fn hinge_gradient(
    spec: &HingeSpec,
    w: &ModelVector,
    x: &[f64],
    y: Label,
) -> Result<ModelVector> {
    check_dims("hinge_gradient", w.dim(), x.len())?;
    let y = check_binary_label(y)?;
    let mut out = vec![0.0; x.len()];
    spec.gradient_raw(w.as_slice(), x, y, &mut out);
    Ok(ModelVector::from_raw(out))
}

/// The binary hinge at a fixed sample, as an [`Objective`] of the model.
#[derive(Debug, Clone)]
pub struct HingeObjective<'a> {
    spec: HingeSpec,
    x: &'a [f64],
    y: f64,
}

impl<'a> HingeObjective<'a> {
    pub fn new(spec: HingeSpec, x: &'a [f64], y: Label) -> Result<Self> {
        Ok(HingeObjective {
            spec,
            x,
            y: check_binary_label(y)?,
        })
    }
}

impl Objective for HingeObjective<'_> {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.spec.hinge_raw(w, self.x, self.y)
    }

    fn gradient_into(&self, w: &[f64], out: &mut [f64]) {
        self.spec.gradient_raw(w, self.x, self.y, out);
    }
}

/// One soft prediction per class.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassScores(Vec<f64>);

impl MulticlassScores {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.len() < 2 {
            return Err(Error::usage(format!(
                "need at least 2 class scores, got {}",
                scores.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::usage("class scores must be finite"));
        }
        Ok(MulticlassScores(scores))
    }

    /// Scores `H^s = w_sᵀx` of a flattened `k × d` model.
    pub fn from_model(w: &ModelVector, x: &[f64], n_classes: usize) -> Result<Self> {
        check_multiclass_dims(w.dim(), x.len(), n_classes)?;
        Self::new(scores_raw(w.as_slice(), x))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn n_classes(&self) -> usize {
        self.0.len()
    }

    /// Highest-scoring class, lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax_raw(&self.0)
    }
}

pub(crate) fn check_multiclass_dims(
    model_dim: usize,
    x_dim: usize,
    n_classes: usize,
) -> Result<()> {
    if n_classes < 2 {
        return Err(Error::usage(format!(
            "need at least 2 classes, got {n_classes}"
        )));
    }
    if x_dim == 0 || model_dim != n_classes * x_dim {
        return Err(Error::usage(format!(
            "multiclass model has {model_dim} coordinates, expected {n_classes} x {x_dim}"
        )));
    }
    Ok(())
}

pub(crate) fn scores_raw(w: &[f64], x: &[f64]) -> Vec<f64> {
    w.chunks_exact(x.len()).map(|row| dot(row, x)).collect()
}

pub(crate) fn argmax_raw(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Index and value of the highest score among classes other than `skip`,
/// lowest index on ties.
pub(crate) fn best_competitor(scores: &[f64], skip: usize) -> (usize, f64) {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if i == skip {
            continue;
        }
        match best {
            Some(b) if scores[b] >= *s => {}
            _ => best = Some(i),
        }
    }
    let b = best.expect("at least two classes");
    (b, scores[b])
}

fn check_class(class: usize, n: usize) -> Result<()> {
    if class >= n {
        return Err(Error::usage(format!(
            "class index {class} out of range for {n} classes"
        )));
    }
    Ok(())
}

/// `Ψ = H^y − max_{s≠y} H^s`.
pub fn multiclass_margin(scores: &MulticlassScores, true_class: usize) -> Result<f64> {
    check_class(true_class, scores.n_classes())?;
    let (_, competitor) = best_competitor(scores.as_slice(), true_class);
    Ok(scores.as_slice()[true_class] - competitor)
}

/// Gap between the top score and the runner-up; never negative.
pub fn confidence_score(scores: &MulticlassScores) -> f64 {
    let top = scores.argmax();
    let (_, second) = best_competitor(scores.as_slice(), top);
    scores.as_slice()[top] - second
}

/// Margin-rescaled multiclass hinge at a fixed sample, as an [`Objective`]
/// of the flattened `k × d` model.
#[derive(Debug, Clone)]
pub struct MulticlassHingeObjective<'a> {
    spec: HingeSpec,
    x: &'a [f64],
    class: usize,
    n_classes: usize,
}

impl<'a> MulticlassHingeObjective<'a> {
    pub fn new(spec: HingeSpec, x: &'a [f64], class: usize, n_classes: usize) -> Result<Self> {
        check_class(class, n_classes)?;
        if x.is_empty() {
            return Err(Error::usage("empty feature vector"));
        }
        Ok(MulticlassHingeObjective {
            spec,
            x,
            class,
            n_classes,
        })
    }
}

impl Objective for MulticlassHingeObjective<'_> {
    fn dim(&self) -> usize {
        self.n_classes * self.x.len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        let scores = scores_raw(w, self.x);
        let (_, competitor) = best_competitor(&scores, self.class);
        let margin = scores[self.class] - competitor;
        (self.spec.margin_target - margin).max(0.0) + self.spec.penalty_raw(w, self.x.len())
    }

    fn gradient_into(&self, w: &[f64], out: &mut [f64]) {
        let d = self.x.len();
        self.spec.penalty_gradient_into(w, d, out);
        let scores = scores_raw(w, self.x);
        let (rival, competitor) = best_competitor(&scores, self.class);
        if scores[self.class] - competitor < self.spec.margin_target {
            let own = self.class * d;
            let other = rival * d;
            for (j, xj) in self.x.iter().enumerate() {
                out[own + j] -= xj;
                out[other + j] += xj;
            }
        }
    }
}

pub fn multiclass_hinge_value(
    spec: &HingeSpec,
    w: &ModelVector,
    x: &[f64],
    true_class: usize,
    n_classes: usize,
) -> Result<f64> {
    check_multiclass_dims(w.dim(), x.len(), n_classes)?;
    let f = MulticlassHingeObjective::new(*spec, x, true_class, n_classes)?;
    Ok(f.value(w.as_slice()))
}

pub fn multiclass_hinge_gradient(
    spec: &HingeSpec,
    w: &ModelVector,
    x: &[f64],
    true_class: usize,
    n_classes: usize,
) -> Result<ModelVector> {
    check_multiclass_dims(w.dim(), x.len(), n_classes)?;
    let f = MulticlassHingeObjective::new(*spec, x, true_class, n_classes)?;
    Ok(ModelVector::from_raw(f.gradient(w.as_slice())))
}

/// `∇Ψ` with respect to the flattened model: `+x` on the true row, `−x` on
/// the strongest competing row.
pub(crate) fn margin_gradient(w: &[f64], x: &[f64], class: usize) -> (f64, Vec<f64>) {
    let d = x.len();
    let scores = scores_raw(w, x);
    let (rival, competitor) = best_competitor(&scores, class);
    let mut grad = vec![0.0; w.len()];
    grad[class * d..(class + 1) * d].copy_from_slice(x);
    for (g, xj) in grad[rival * d..(rival + 1) * d].iter_mut().zip(x) {
        *g = -xj;
    }
    (scores[class] - competitor, grad)
}
