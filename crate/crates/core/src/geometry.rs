//! Bregman geometry of the decision space.
//!
//! Only the squared-euclidean regularizer `R(w) = ½‖w‖²` is implemented; its
//! Bregman divergence is `½‖a − b‖²` and the mirror map is the identity, so a
//! mirror step reduces to a projected gradient step. The regularizer is still
//! carried as an enumeration so other mirror maps can be slotted in without
//! changing any call site.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense parameter vector. When feature augmentation is on, the last
/// coordinate is the bias weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelVector(Vec<f64>);

impl ModelVector {
    /// Builds a model vector, rejecting NaN and infinite entries.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::usage(format!(
                "model coordinate {i} is not finite ({})",
                coords[i]
            )));
        }
        Ok(ModelVector(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        ModelVector(vec![0.0; dim])
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()), "non-finite model");
        ModelVector(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl AsRef<[f64]> for ModelVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl From<ModelVector> for Vec<f64> {
    fn from(v: ModelVector) -> Self {
        v.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn check_dims(what: &str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::usage(format!(
            "{what}: dimension mismatch ({a} vs {b})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularizer {
    /// `R(w) = ½‖w‖²`, 1-strongly convex w.r.t. the euclidean norm.
    #[default]
    SquaredEuclidean,
}

/// Regularizer plus the decision space `K`, a centered euclidean ball of
/// radius `radius` (or all of `Rⁿ` when unbounded).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BregmanGeometry {
    #[serde(default)]
    pub regularizer: Regularizer,
    #[serde(default)]
    pub radius: Option<f64>,
}

impl BregmanGeometry {
    pub fn unbounded() -> Self {
        BregmanGeometry {
            regularizer: Regularizer::SquaredEuclidean,
            radius: None,
        }
    }

    pub fn ball(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::usage(format!(
                "decision-space radius must be positive, got {radius}"
            )));
        }
        Ok(BregmanGeometry {
            regularizer: Regularizer::SquaredEuclidean,
            radius: Some(radius),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self.radius {
            Some(r) if !(r > 0.0 && r.is_finite()) => Err(Error::usage(format!(
                "decision-space radius must be positive, got {r}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn regularizer_value(&self, w: &[f64]) -> f64 {
        match self.regularizer {
            Regularizer::SquaredEuclidean => 0.5 * dot(w, w),
        }
    }

    /// `D_R(a, b) = R(a) − R(b) − ⟨∇R(b), a − b⟩`.
    pub fn bregman_divergence(&self, a: &ModelVector, b: &ModelVector) -> Result<f64> {
        check_dims("bregman_divergence", a.dim(), b.dim())?;
        Ok(self.divergence_raw(a.as_slice(), b.as_slice()))
    }

    pub(crate) fn divergence_raw(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.regularizer {
            Regularizer::SquaredEuclidean => {
                0.5 * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
            }
        }
    }

    /// Euclidean projection onto `K`.
    pub fn project(&self, w: &ModelVector) -> ModelVector {
        let mut coords = w.as_slice().to_vec();
        self.project_in_place(&mut coords);
        ModelVector::from_raw(coords)
    }

    pub(crate) fn project_in_place(&self, w: &mut [f64]) {
        let Some(radius) = self.radius else { return };
        let norm = dot(w, w).sqrt();
        if norm > radius {
            let scale = radius / norm;
            w.iter_mut().for_each(|c| *c *= scale);
            // rescaling can land a hair outside the ball; pull it back so
            // projection stays idempotent
            while dot(w, w).sqrt() > radius {
                w.iter_mut().for_each(|c| *c *= 1.0 - f64::EPSILON);
            }
        }
    }

    /// Explicit mirror step: `argmin_{w' ∈ K} step·⟨g, w'⟩ + D_R(w', w)`.
    pub fn mirror_step(
        &self,
        w: &ModelVector,
        gradient: &ModelVector,
        step: f64,
    ) -> Result<ModelVector> {
        check_dims("mirror_step", w.dim(), gradient.dim())?;
        check_step(step)?;
        match self.regularizer {
            Regularizer::SquaredEuclidean => {
                let mut next: Vec<f64> = w
                    .as_slice()
                    .iter()
                    .zip(gradient.as_slice())
                    .map(|(wi, gi)| wi - step * gi)
                    .collect();
                self.project_in_place(&mut next);
                Ok(ModelVector::from_raw(next))
            }
        }
    }

    /// Implicit (proximal) step: approximately solves
    /// `argmin_{w ∈ K} step·loss(w) + D_R(w, anchor)`.
    ///
    /// Runs `inner_iterations` of (sub)gradient descent on the proximal
    /// objective starting at `anchor` with rate `inner_rate`. A step that
    /// does not lower the objective has crossed a kink; it is retried as a
    /// two-cut bundle step built from the gradients on both sides, and if
    /// that fails too the rate is halved. The result is never worse than
    /// `anchor`. The final iterate is projected onto
    /// `K`.
    pub fn proximal_step(
        &self,
        anchor: &ModelVector,
        loss: &dyn Objective,
        step: f64,
        inner_iterations: usize,
        inner_rate: f64,
    ) -> Result<ModelVector> {
        check_dims("proximal_step", anchor.dim(), loss.dim())?;
        check_step(step)?;
        if !(inner_rate > 0.0 && inner_rate.is_finite()) {
            return Err(Error::usage(format!(
                "inner rate must be positive, got {inner_rate}"
            )));
        }
        let a = anchor.as_slice();
        let objective = |w: &[f64]| step * loss.value(w) + self.divergence_raw(w, a);

        let mut w = a.to_vec();
        let mut value = objective(&w);
        let mut rate = inner_rate;
        let n = w.len();
        let mut gw = vec![0.0; n];
        let mut gc = vec![0.0; n];
        let mut candidate = vec![0.0; n];
        let slack = |v: f64| v + 1e-14 * v.abs().max(1.0);
        let dot = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).sum::<f64>();
        for _ in 0..inner_iterations {
            loss.gradient_into(&w, &mut gw);
            // ∇D_R(·, a) is w − a for the euclidean regularizer
            for (((c, wi), ai), gi) in candidate.iter_mut().zip(&w).zip(a).zip(&gw) {
                *c = wi - rate * (step * gi + (wi - ai));
            }
            let next = objective(&candidate);
            if next <= slack(value) {
                std::mem::swap(&mut w, &mut candidate);
                value = next;
                continue;
            }
            // The step crossed a kink. Cut the loss at both ends and jump to
            // the exact minimizer of step·max(cuts) + D_R(·, a), which sits
            // at a = step·(θ·g_w + (1 − θ)·g_c) for the best θ ∈ [0, 1].
            loss.gradient_into(&candidate, &mut gc);
            let alpha_w = loss.value(&w) - dot(&gw, &w);
            let alpha_c = loss.value(&candidate) - dot(&gc, &candidate);
            let (mut num, mut den) = (0.0, 0.0);
            for ((g1, g2), ai) in gw.iter().zip(&gc).zip(a) {
                let d = g1 - g2;
                num += d * (ai - step * g2);
                den += d * d;
            }
            let theta = if den > 0.0 {
                ((alpha_w - alpha_c + num) / (step * den)).clamp(0.0, 1.0)
            } else {
                1.0
            };
            for ((c, ai), (g1, g2)) in candidate.iter_mut().zip(a).zip(gw.iter().zip(&gc)) {
                *c = ai - step * (theta * g1 + (1.0 - theta) * g2);
            }
            let next = objective(&candidate);
            if next <= slack(value) {
                std::mem::swap(&mut w, &mut candidate);
                value = next;
            } else {
                rate *= 0.5;
            }
        }
        self.project_in_place(&mut w);
        Ok(ModelVector::from_raw(w))
    }
}

fn check_step(step: f64) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::usage(format!("step must be positive, got {step}")));
    }
    Ok(())
}

/// A differentiable (or subdifferentiable) convex scalar function of a model.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, w: &[f64]) -> f64;

    /// Writes a (sub)gradient at `w` into `out`.
    fn gradient_into(&self, w: &[f64], out: &mut [f64]);

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.gradient_into(w, &mut out);
        out
    }
}

/// `w ↦ ⟨g, w⟩`.
#[derive(Debug, Clone)]
pub struct LinearObjective(pub Vec<f64>);

impl Objective for LinearObjective {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        dot(&self.0, w)
    }

    fn gradient_into(&self, _w: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.0);
    }
}

/// The zero function on a fixed dimension.
#[derive(Debug, Clone, Copy)]
pub struct ZeroObjective(pub usize);

impl Objective for ZeroObjective {
    fn dim(&self) -> usize {
        self.0
    }

    fn value(&self, _w: &[f64]) -> f64 {
        0.0
    }

    fn gradient_into(&self, _w: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
}
