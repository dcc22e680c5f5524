//! Two-point stream whose labels swap halfway through. No unsupervised
//! learner can notice the swap; used to show that queries are necessary.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Sample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelFlipConfig {
    /// Must be even; the labels swap at round `T/2 + 1`.
    pub horizon_t: usize,
    /// Labeled `+1` in the first half, `−1` in the second.
    pub point_a: [f64; 2],
    /// Labeled `−1` in the first half, `+1` in the second.
    pub point_b: [f64; 2],
    pub n_pretrain: usize,
}

impl Default for LabelFlipConfig {
    fn default() -> Self {
        LabelFlipConfig {
            horizon_t: 2000,
            point_a: [-1.0, 0.0],
            point_b: [1.0, 0.0],
            n_pretrain: 0,
        }
    }
}

impl LabelFlipConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.horizon_t == 0 || self.horizon_t % 2 != 0 {
            problems.push(format!(
                "label-flip horizon must be even and positive, got {}",
                self.horizon_t
            ));
        }
        problems
    }

    pub fn flipped(&self, t: usize) -> bool {
        t > self.horizon_t / 2
    }
}

pub fn label_flip_sample<R: Rng + ?Sized>(
    config: &LabelFlipConfig,
    t: usize,
    rng: &mut R,
) -> Result<Sample> {
    if t == 0 || t > config.horizon_t {
        return Err(Error::usage(format!(
            "round {t} outside the horizon 1..={}",
            config.horizon_t
        )));
    }
    let pick_a = rng.random_bool(0.5);
    let base = if pick_a { 1 } else { -1 };
    let label = if config.flipped(t) { -base } else { base };
    let p = if pick_a {
        config.point_a
    } else {
        config.point_b
    };
    Ok(Sample::new(p.to_vec(), label))
}
