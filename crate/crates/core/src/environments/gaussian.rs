//! Two-class (and k-class) Gaussian clouds whose centers rotate about the
//! origin as the stream advances.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Sample;
use crate::error::{Error, Result};

/// Class `+1` is drawn around `center_inner`, class `−1` around
/// `center_outer`. At round `t` both centers are rotated counterclockwise by
/// `total_rotation_radians · (t − 1) / (T − 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RotatingGaussianConfig {
    pub center_inner: [f64; 2],
    pub center_outer: [f64; 2],
    /// Isotropic covariance `s·I`.
    pub covariance_scale: f64,
    pub total_rotation_radians: f64,
    pub horizon_t: usize,
    /// Probability of label `+1`.
    pub class_balance: f64,
    pub augment_bias: bool,
    pub n_pretrain: usize,
}

impl Default for RotatingGaussianConfig {
    fn default() -> Self {
        RotatingGaussianConfig {
            center_inner: [5.0, 0.0],
            center_outer: [15.0, 0.0],
            covariance_scale: 3.0,
            total_rotation_radians: std::f64::consts::PI,
            horizon_t: 2000,
            class_balance: 0.5,
            augment_bias: true,
            n_pretrain: 2000,
        }
    }
}

pub fn rotate(p: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

fn rotation_at(total: f64, horizon: usize, t: usize) -> f64 {
    if horizon <= 1 {
        0.0
    } else {
        total * (t - 1) as f64 / (horizon - 1) as f64
    }
}

fn check_round(t: usize, horizon: usize) -> Result<()> {
    if t == 0 || t > horizon {
        return Err(Error::usage(format!(
            "round {t} outside the horizon 1..={horizon}"
        )));
    }
    Ok(())
}

fn draw_around<R: Rng + ?Sized>(center: [f64; 2], scale: f64, bias: bool, rng: &mut R) -> Vec<f64> {
    let sd = scale.sqrt();
    let mut x: Vec<f64> = center
        .iter()
        .map(|c| {
            let z: f64 = rng.sample(StandardNormal);
            c + sd * z
        })
        .collect();
    if bias {
        x.push(1.0);
    }
    x
}

impl RotatingGaussianConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.horizon_t == 0 {
            problems.push("horizon_t must be at least 1".to_string());
        }
        if !(self.covariance_scale >= 0.0 && self.covariance_scale.is_finite()) {
            problems.push(format!(
                "covariance_scale must be nonnegative, got {}",
                self.covariance_scale
            ));
        }
        if !(0.0..=1.0).contains(&self.class_balance) {
            problems.push(format!(
                "class_balance must lie in [0, 1], got {}",
                self.class_balance
            ));
        }
        problems
    }

    pub fn feature_dim(&self) -> usize {
        if self.augment_bias {
            3
        } else {
            2
        }
    }

    pub fn angle(&self, t: usize) -> f64 {
        rotation_at(self.total_rotation_radians, self.horizon_t, t)
    }

    /// Center of class `y` at rotation `angle`.
    pub fn center(&self, y: i64, angle: f64) -> [f64; 2] {
        rotate(
            if y > 0 {
                self.center_inner
            } else {
                self.center_outer
            },
            angle,
        )
    }
}

/// Draws `(x_t, y_t)` from the distribution of round `t`.
pub fn gaussian_sample<R: Rng + ?Sized>(
    config: &RotatingGaussianConfig,
    t: usize,
    rng: &mut R,
) -> Result<Sample> {
    check_round(t, config.horizon_t)?;
    let u: f64 = rng.random();
    let y = if u < config.class_balance { 1 } else { -1 };
    let center = config.center(y, config.angle(t));
    Ok(Sample::new(
        draw_around(center, config.covariance_scale, config.augment_bias, rng),
        y,
    ))
}

/// `n_classes` clouds evenly spaced on a circle of radius `radius`, rotating
/// together. Labels are uniform over classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RotatingMulticlassConfig {
    pub n_classes: usize,
    pub radius: f64,
    pub covariance_scale: f64,
    pub total_rotation_radians: f64,
    pub horizon_t: usize,
    pub augment_bias: bool,
    pub n_pretrain: usize,
}

impl Default for RotatingMulticlassConfig {
    fn default() -> Self {
        RotatingMulticlassConfig {
            n_classes: 3,
            radius: 10.0,
            covariance_scale: 3.0,
            total_rotation_radians: std::f64::consts::FRAC_PI_2,
            horizon_t: 2000,
            augment_bias: true,
            n_pretrain: 2000,
        }
    }
}

impl RotatingMulticlassConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.n_classes < 2 {
            problems.push(format!(
                "n_classes must be at least 2, got {}",
                self.n_classes
            ));
        }
        if self.horizon_t == 0 {
            problems.push("horizon_t must be at least 1".to_string());
        }
        if !(self.radius > 0.0) {
            problems.push(format!("radius must be positive, got {}", self.radius));
        }
        if !(self.covariance_scale >= 0.0) {
            problems.push(format!(
                "covariance_scale must be nonnegative, got {}",
                self.covariance_scale
            ));
        }
        problems
    }

    pub fn center(&self, class: usize, angle: f64) -> [f64; 2] {
        let phase = std::f64::consts::TAU * class as f64 / self.n_classes as f64;
        rotate([self.radius, 0.0], phase + angle)
    }

    pub fn angle(&self, t: usize) -> f64 {
        rotation_at(self.total_rotation_radians, self.horizon_t, t)
    }
}

pub fn multiclass_gaussian_sample<R: Rng + ?Sized>(
    config: &RotatingMulticlassConfig,
    t: usize,
    rng: &mut R,
) -> Result<Sample> {
    check_round(t, config.horizon_t)?;
    let class = rng.random_range(0..config.n_classes);
    let center = config.center(class, config.angle(t));
    Ok(Sample::new(
        draw_around(center, config.covariance_scale, config.augment_bias, rng),
        class as i64,
    ))
}
