//! Expected hinge loss under the rotating Gaussian stream.
//!
//! For class `y` the signed score `z = y·wᵀx` is Gaussian with mean
//! `m = y·(w_fᵀc_y + b)` and standard deviation `s = √scale·‖w_f‖`, where
//! `w_f` excludes the bias. With `a = margin − m`,
//! `E max{0, a + m − z} = a·Φ(a/s) + s·φ(a/s)`.

use rand::Rng;

use crate::environments::{RotatingGaussianConfig, Sample};
use crate::error::{Error, Result};
use crate::geometry::{check_dims, ModelVector};
use crate::learners::Task;
use crate::losses::HingeSpec;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Value, gradient and Hessian of the expected loss at one rotation angle.
pub(crate) struct ExpectedLoss {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<f64>,
}

/// Splits `w` into feature weights and bias (zero when not augmented).
fn split(config: &RotatingGaussianConfig, w: &[f64]) -> ([f64; 2], f64) {
    let b = if config.augment_bias { w[2] } else { 0.0 };
    ([w[0], w[1]], b)
}

pub(crate) fn expected_at_angle(
    spec: &HingeSpec,
    config: &RotatingGaussianConfig,
    w: &[f64],
    angle: f64,
    with_hessian: bool,
) -> ExpectedLoss {
    let n = w.len();
    let (wf, b) = split(config, w);
    let k = config.covariance_scale.sqrt();
    let wf_norm = (wf[0] * wf[0] + wf[1] * wf[1]).sqrt();
    let sd = k * wf_norm;

    let mut value = spec.penalty_raw(w, n);
    let mut gradient = vec![0.0; n];
    spec.penalty_gradient_into(w, n, &mut gradient);
    let mut hessian = vec![0.0; if with_hessian { n * n } else { 0 }];
    if with_hessian {
        for i in 0..n {
            let exempt = spec.unpenalized_bias && i + 1 == n;
            hessian[i * n + i] = if exempt { 0.0 } else { 2.0 * spec.penalty_c };
        }
    }

    // d sd / dw on the feature block
    let mut g_s = vec![0.0; n];
    if wf_norm > 0.0 {
        g_s[0] = k * wf[0] / wf_norm;
        g_s[1] = k * wf[1] / wf_norm;
    }

    for (y, weight) in [
        (1.0, config.class_balance),
        (-1.0, 1.0 - config.class_balance),
    ] {
        if weight == 0.0 {
            continue;
        }
        let c = config.center(y as i64, angle);
        let m = y * (wf[0] * c[0] + wf[1] * c[1] + b);
        let mut g_m = vec![y * c[0], y * c[1]];
        if config.augment_bias {
            g_m.push(y);
        }
        let a = spec.margin_target - m;

        if sd <= 0.0 {
            // point mass
            value += weight * a.max(0.0);
            if a > 0.0 {
                for (g, gm) in gradient.iter_mut().zip(&g_m) {
                    *g -= weight * gm;
                }
            }
            continue;
        }
        let u = a / sd;
        let big_phi = normal_cdf(u);
        let small_phi = normal_pdf(u);
        value += weight * (a * big_phi + sd * small_phi);
        for i in 0..n {
            gradient[i] += weight * (-big_phi * g_m[i] + small_phi * g_s[i]);
        }
        if with_hessian {
            let e_aa = small_phi / sd;
            let e_as = -small_phi * u / sd;
            let e_ss = small_phi * u * u / sd;
            for i in 0..n {
                for j in 0..n {
                    hessian[i * n + j] += weight
                        * (e_aa * g_m[i] * g_m[j] - e_as * (g_m[i] * g_s[j] + g_s[i] * g_m[j])
                            + e_ss * g_s[i] * g_s[j]);
                }
            }
            // curvature of sd = k‖w_f‖
            if wf_norm > 0.0 {
                let scale = weight * small_phi * k / wf_norm;
                for i in 0..2 {
                    for j in 0..2 {
                        let proj =
                            if i == j { 1.0 } else { 0.0 } - wf[i] * wf[j] / (wf_norm * wf_norm);
                        hessian[i * n + j] += scale * proj;
                    }
                }
            }
        }
    }
    ExpectedLoss {
        value,
        gradient,
        hessian,
    }
}

/// Closed-form `l_t(w) = E_{(x,y)∼P_t} f(w; x, y)` for the rotating Gaussian.
pub fn expected_hinge_gaussian(
    spec: &HingeSpec,
    w: &ModelVector,
    config: &RotatingGaussianConfig,
    t: usize,
) -> Result<f64> {
    check_dims("expected_hinge_gaussian", w.dim(), config.feature_dim())?;
    if t == 0 || t > config.horizon_t {
        return Err(Error::usage(format!(
            "round {t} outside the horizon 1..={}",
            config.horizon_t
        )));
    }
    Ok(expected_at_angle(spec, config, w.as_slice(), config.angle(t), false).value)
}

/// Sample mean and standard error of the loss over `n` fresh draws.
pub fn mc_expected_loss<R, F>(
    task: Task,
    spec: &HingeSpec,
    w: &ModelVector,
    mut sampler: F,
    n: usize,
    rng: &mut R,
) -> Result<(f64, f64)>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> Result<Sample>,
{
    if n < 2 {
        return Err(Error::usage(format!("need at least 2 draws, got {n}")));
    }
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n {
        let s = sampler(rng)?;
        task.check_model(w.dim(), s.features.len())?;
        let v = task.loss(*spec, w.as_slice(), &s.features, s.label)?;
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (n - 1) as f64;
    Ok((mean, (var / n as f64).sqrt()))
}
