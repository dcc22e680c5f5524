use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::task::Task;
use crate::environments::Sample;
use crate::error::{Error, Result};
use crate::geometry::{BregmanGeometry, ModelVector};
use crate::losses::HingeSpec;

/// How the initial models are obtained from source-domain data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum PretrainSpec {
    /// Shuffled multi-epoch subgradient descent on the mean hinge objective.
    Fit { epochs: usize, rate: f64 },
    /// Skip fitting and start from this vector.
    Fixed { init: Vec<f64> },
}

impl Default for PretrainSpec {
    fn default() -> Self {
        PretrainSpec::Fit {
            epochs: 20,
            rate: 0.002,
        }
    }
}

impl PretrainSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PretrainSpec::Fit { rate, .. } if !(*rate > 0.0 && rate.is_finite()) => Err(
                Error::usage(format!("pretrain rate must be positive, got {rate}")),
            ),
            PretrainSpec::Fixed { init } if init.is_empty() => {
                Err(Error::usage("fixed init must not be empty"))
            }
            _ => Ok(()),
        }
    }
}

/// Fits an initial model on labeled source samples. Shuffling is driven by
/// `rng`, so the result is a pure function of the inputs and the seed.
pub fn pretrain<R: Rng + ?Sized>(
    samples: &[Sample],
    task: Task,
    loss: &HingeSpec,
    geometry: &BregmanGeometry,
    spec: &PretrainSpec,
    rng: &mut R,
) -> Result<ModelVector> {
    spec.validate()?;
    let (epochs, rate) = match spec {
        PretrainSpec::Fixed { init } => {
            return Ok(geometry.project(&ModelVector::new(init.clone())?));
        }
        PretrainSpec::Fit { epochs, rate } => (*epochs, *rate),
    };
    let first = samples
        .first()
        .ok_or_else(|| Error::usage("pretraining needs at least one sample"))?;
    let dim = task.model_dim(first.features.len());
    for s in samples {
        task.check_model(dim, s.features.len())?;
        task.check_label(s.label)?;
    }
    let mut w = ModelVector::zeros(dim);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for _ in 0..epochs {
        order.shuffle(rng);
        for &i in &order {
            let s = &samples[i];
            let grad = task.loss_gradient(*loss, w.as_slice(), &s.features, s.label)?;
            w = geometry.mirror_step(&w, &ModelVector::from_raw(grad), rate)?;
        }
    }
    Ok(w)
}
