//! Non-stationary labeled streams.

mod csv_stream;
mod gaussian;
mod label_flip;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::learners::Task;
use crate::losses::Label;

pub use csv_stream::{csv_stream, ColumnRef, CsvStreamConfig, LabelKind};
pub use gaussian::{
    gaussian_sample, multiclass_gaussian_sample, rotate, RotatingGaussianConfig,
    RotatingMulticlassConfig,
};
pub use label_flip::{label_flip_sample, LabelFlipConfig};

/// One labeled example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: Label,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: Label) -> Self {
        Sample { features, label }
    }
}

/// Environment descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StreamConfig {
    RotatingGaussian(RotatingGaussianConfig),
    RotatingMulticlass(RotatingMulticlassConfig),
    LabelFlip(LabelFlipConfig),
    Csv(CsvStreamConfig),
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig::RotatingGaussian(RotatingGaussianConfig::default())
    }
}

/// A realized stream: labeled source data for pretraining plus the online
/// sequence itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub pretrain: Vec<Sample>,
    pub stream: Vec<Sample>,
}

impl StreamConfig {
    pub fn task(&self) -> Task {
        match self {
            StreamConfig::RotatingMulticlass(c) => Task::Multiclass {
                n_classes: c.n_classes,
            },
            StreamConfig::Csv(c) => match c.label_kind {
                LabelKind::Binary => Task::Binary,
                LabelKind::Multiclass { n_classes } => Task::Multiclass { n_classes },
            },
            _ => Task::Binary,
        }
    }

    /// Horizon when it is known without reading files.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            StreamConfig::RotatingGaussian(c) => Some(c.horizon_t),
            StreamConfig::RotatingMulticlass(c) => Some(c.horizon_t),
            StreamConfig::LabelFlip(c) => Some(c.horizon_t),
            StreamConfig::Csv(_) => None,
        }
    }

    pub fn set_horizon(&mut self, horizon: usize) {
        match self {
            StreamConfig::RotatingGaussian(c) => c.horizon_t = horizon,
            StreamConfig::RotatingMulticlass(c) => c.horizon_t = horizon,
            StreamConfig::LabelFlip(c) => c.horizon_t = horizon,
            StreamConfig::Csv(_) => {}
        }
    }

    pub fn validate(&self) -> Vec<String> {
        match self {
            StreamConfig::RotatingGaussian(c) => c.validate(),
            StreamConfig::RotatingMulticlass(c) => c.validate(),
            StreamConfig::LabelFlip(c) => c.validate(),
            StreamConfig::Csv(c) => c.validate(),
        }
    }

    /// Draws the pretraining set (at the source distribution) and then the
    /// online sequence, in that order, from `rng`.
    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Realization> {
        match self {
            StreamConfig::RotatingGaussian(c) => {
                let pretrain = (0..c.n_pretrain)
                    .map(|_| gaussian_sample(c, 1, rng))
                    .collect::<Result<_>>()?;
                let stream = (1..=c.horizon_t)
                    .map(|t| gaussian_sample(c, t, rng))
                    .collect::<Result<_>>()?;
                Ok(Realization { pretrain, stream })
            }
            StreamConfig::RotatingMulticlass(c) => {
                let pretrain = (0..c.n_pretrain)
                    .map(|_| multiclass_gaussian_sample(c, 1, rng))
                    .collect::<Result<_>>()?;
                let stream = (1..=c.horizon_t)
                    .map(|t| multiclass_gaussian_sample(c, t, rng))
                    .collect::<Result<_>>()?;
                Ok(Realization { pretrain, stream })
            }
            StreamConfig::LabelFlip(c) => {
                let pretrain = (0..c.n_pretrain)
                    .map(|_| label_flip_sample(c, 1, rng))
                    .collect::<Result<_>>()?;
                let stream = (1..=c.horizon_t)
                    .map(|t| label_flip_sample(c, t, rng))
                    .collect::<Result<_>>()?;
                Ok(Realization { pretrain, stream })
            }
            StreamConfig::Csv(c) => {
                let mut rows: Vec<Sample> = csv_stream(c)?.collect();
                let split = c.n_pretrain.min(rows.len());
                let stream = rows.split_off(split);
                Ok(Realization {
                    pretrain: rows,
                    stream,
                })
            }
        }
    }
}
