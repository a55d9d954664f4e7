//! Loss kernels for scale-consistent VAE fine-tuning: feature-map
//! distillation, KL, patch adversarial terms, the gradient-ratio adaptive
//! weight and the weighted total.

use crate::error::{Error, Result};
use crate::tensor::{pairwise_sum, Real, Tensor};

/// Clamp margin for discriminator probabilities before taking logs.
pub const PROB_EPS: f64 = 1e-7;
/// Stabilizer added to the adversarial gradient norm.
pub const ADAPTIVE_EPS: f64 = 1e-6;
/// Upper bound on the adaptive weight.
pub const ADAPTIVE_MAX: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpsampleMode {
    #[default]
    Nearest,
    /// Bilinear with half-pixel centers (`align_corners = false`).
    Bilinear,
}

pub fn upsample2x<T: Real>(x: &Tensor<T>, mode: UpsampleMode) -> Tensor<T> {
    let (c, h, w) = x.shape();
    let (oh, ow) = (2 * h, 2 * w);
    let mut out = Vec::with_capacity(c * oh * ow);
    match mode {
        UpsampleMode::Nearest => {
            for ch in 0..c {
                for y in 0..oh {
                    for xx in 0..ow {
                        out.push(x.get(ch, y / 2, xx / 2));
                    }
                }
            }
        }
        UpsampleMode::Bilinear => {
            let ys: Vec<_> = (0..oh).map(|o| source_coord(o, h)).collect();
            let xs: Vec<_> = (0..ow).map(|o| source_coord(o, w)).collect();
            for ch in 0..c {
                for &(y0, y1, fy) in &ys {
                    for &(x0, x1, fx) in &xs {
                        let top = lerp(x.get(ch, y0, x0).as_f64(), x.get(ch, y0, x1).as_f64(), fx);
                        let bottom = lerp(x.get(ch, y1, x0).as_f64(), x.get(ch, y1, x1).as_f64(), fx);
                        out.push(T::from_f64(lerp(top, bottom, fy)));
                    }
                }
            }
        }
    }
    Tensor::from_raw(c, oh, ow, out)
}

// Half-pixel mapping: src = (dst + 0.5) / 2 - 0.5, clamped at the low edge.
fn source_coord(dst: usize, len: usize) -> (usize, usize, f64) {
    let src = ((dst as f64 + 0.5) * 0.5 - 0.5).max(0.0);
    let i0 = (src.floor() as usize).min(len - 1);
    let i1 = (i0 + 1).min(len - 1);
    (i0, i1, src - i0 as f64)
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureRole {
    /// Penultimate decoder layer of the original-compression teacher.
    TeacherPenultimate,
    /// Penultimate decoder layer of the higher-compression student.
    StudentPenultimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap<T = f64> {
    pub role: FeatureRole,
    pub tensor: Tensor<T>,
}

impl<T: Real> FeatureMap<T> {
    pub fn teacher(tensor: Tensor<T>) -> Self {
        Self {
            role: FeatureRole::TeacherPenultimate,
            tensor,
        }
    }

    pub fn student(tensor: Tensor<T>) -> Self {
        Self {
            role: FeatureRole::StudentPenultimate,
            tensor,
        }
    }
}

/// Scale-consistency distillation loss:
/// `mean((teacher - upsample2x(student))^2)`.
pub fn sc_loss<T: Real>(teacher: &FeatureMap<T>, student: &FeatureMap<T>, mode: UpsampleMode) -> Result<f64> {
    if teacher.role != FeatureRole::TeacherPenultimate || student.role != FeatureRole::StudentPenultimate {
        return Err(Error::invalid(format!(
            "scale-consistency loss expects (teacher, student) feature maps, got ({:?}, {:?})",
            teacher.role, student.role
        )));
    }
    let (tc, th, tw) = teacher.tensor.shape();
    let (sc, sh, sw) = student.tensor.shape();
    if tc != sc || th != 2 * sh || tw != 2 * sw {
        return Err(Error::invalid(format!(
            "teacher {:?} must have the student's channels and twice its spatial size {:?}",
            teacher.tensor.shape(),
            student.tensor.shape()
        )));
    }
    teacher.tensor.mean_sq_diff(&upsample2x(&student.tensor, mode))
}

/// Diagonal Gaussian posterior parameterized by mean and log-variance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior<T = f64> {
    mu: Tensor<T>,
    logvar: Tensor<T>,
}

impl<T: Real> GaussianPosterior<T> {
    pub fn new(mu: Tensor<T>, logvar: Tensor<T>) -> Result<Self> {
        mu.ensure_same_shape(&logvar)?;
        Ok(Self { mu, logvar })
    }

    pub fn mu(&self) -> &Tensor<T> {
        &self.mu
    }

    pub fn logvar(&self) -> &Tensor<T> {
        &self.logvar
    }
}

/// Element-mean KL divergence to the standard normal:
/// `0.5 * (mu^2 + sigma^2 - 1 - log sigma^2)`.
pub fn kl_loss<T: Real>(q: &GaussianPosterior<T>) -> Result<f64> {
    if q.mu.is_empty() {
        return Err(Error::invalid("KL over an empty posterior"));
    }
    let mu = q.mu.data();
    let lv = q.logvar.data();
    let terms: Vec<f64> = mu
        .iter()
        .zip(lv)
        .map(|(&m, &l)| {
            let (m, l) = (m.as_f64(), l.as_f64());
            0.5 * (m * m + l.exp() - 1.0 - l)
        })
        .collect();
    Ok(pairwise_sum(&terms, |v| v) / terms.len() as f64)
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

fn mean_log<T: Real>(t: &Tensor<T>, f: impl Fn(f64) -> f64 + Copy) -> Result<f64> {
    if t.is_empty() {
        return Err(Error::invalid("adversarial loss over an empty tensor"));
    }
    Ok(pairwise_sum(t.data(), |p: T| f(clamp_prob(p.as_f64()))) / t.len() as f64)
}

/// `mean(log D(x)) + mean(log(1 - D(x_hat)))`, the quantity the
/// discriminator maximizes. Inputs are per-patch probabilities.
pub fn adv_discriminator_loss<T: Real>(d_real: &Tensor<T>, d_fake: &Tensor<T>) -> Result<f64> {
    Ok(mean_log(d_real, f64::ln)? + mean_log(d_fake, |p| (1.0 - p).ln())?)
}

/// `mean(log(1 - D(x_hat)))`, minimized by the generator.
pub fn adv_generator_loss<T: Real>(d_fake: &Tensor<T>) -> Result<f64> {
    mean_log(d_fake, |p| (1.0 - p).ln())
}

/// Ratio of perceptual to adversarial gradient norms at the decoder's last
/// layer, `lpips / (adv + 1e-6)` clamped to `[0, 1e4]`. Callers pass 2-norms
/// of the flattened gradients.
pub fn adaptive_weight(grad_lpips_norm: f64, grad_adv_norm: f64) -> f64 {
    let r = grad_lpips_norm / (grad_adv_norm + ADAPTIVE_EPS);
    if r.is_nan() {
        return 0.0;
    }
    r.clamp(0.0, ADAPTIVE_MAX)
}

/// Euclidean norm of a flattened gradient.
pub fn grad_norm<T: Real>(grad: &Tensor<T>) -> f64 {
    grad.sum_squares().sqrt()
}

/// Perceptual distance between an image and its reconstruction.
pub trait PerceptualDistance {
    fn distance(&self, a: &Tensor<f64>, b: &Tensor<f64>) -> Result<f64>;
}

impl<F> PerceptualDistance for F
where
    F: Fn(&Tensor<f64>, &Tensor<f64>) -> Result<f64>,
{
    fn distance(&self, a: &Tensor<f64>, b: &Tensor<f64>) -> Result<f64> {
        self(a, b)
    }
}

/// Mean squared difference; stands in for a learned perceptual metric.
#[derive(Debug, Clone, Copy, Default)]
pub struct MseDistance;

impl PerceptualDistance for MseDistance {
    fn distance(&self, a: &Tensor<f64>, b: &Tensor<f64>) -> Result<f64> {
        a.mean_sq_diff(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaeLossWeights {
    pub lambda_sc: f64,
    pub lambda_kl: f64,
    pub lambda_lpips: f64,
    pub lambda_adv: f64,
}

impl Default for VaeLossWeights {
    fn default() -> Self {
        Self {
            lambda_sc: 1.0,
            lambda_kl: 1e-6,
            lambda_lpips: 0.1,
            lambda_adv: 0.05,
        }
    }
}

/// Individual loss terms. Leave `kl` empty for the decoder-only objective.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VaeLossParts {
    pub rec: f64,
    pub sc: f64,
    pub kl: Option<f64>,
    pub lpips: f64,
    pub adv_gen: f64,
}

/// `rec + l_sc*sc + l_kl*kl + l_lpips*lpips + l_adv*adaptive*adv_gen`.
pub fn vae_total_loss(parts: &VaeLossParts, weights: &VaeLossWeights, adaptive: f64) -> Result<f64> {
    let lambdas = [
        weights.lambda_sc,
        weights.lambda_kl,
        weights.lambda_lpips,
        weights.lambda_adv,
    ];
    if lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::invalid(format!(
            "loss weights must be finite and non-negative: {weights:?}"
        )));
    }
    let values = [
        parts.rec,
        parts.sc,
        parts.kl.unwrap_or(0.0),
        parts.lpips,
        parts.adv_gen,
        adaptive,
    ];
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "non-finite loss term: {parts:?}, adaptive {adaptive}"
        )));
    }
    let mut total = parts.rec + weights.lambda_sc * parts.sc;
    if let Some(kl) = parts.kl {
        total += weights.lambda_kl * kl;
    }
    total += weights.lambda_lpips * parts.lpips;
    total += weights.lambda_adv * adaptive * parts.adv_gen;
    Ok(total)
}
