//! Forward-process kernels, noise-prediction and rectified-flow losses, the
//! wavelet-domain rectified-flow loss, and an Euler ODE sampler.
//!
//! All losses use mean reduction over tensor elements.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{pairwise_sum, Real, Tensor};
use crate::wavelet::{self, Subband, SubbandSet};

/// Discrete variance schedule `beta_1..beta_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::invalid("noise schedule needs at least one step"));
        }
        if let Some((t, b)) = betas.iter().enumerate().find(|(_, b)| !(**b > 0.0 && **b < 1.0)) {
            return Err(Error::invalid(format!("beta_{} = {b} is outside (0, 1)", t + 1)));
        }
        let mut acc = 1.0;
        let alpha_bars = betas
            .iter()
            .map(|b| {
                acc *= 1.0 - b;
                acc
            })
            .collect();
        Ok(Self { betas, alpha_bars })
    }

    /// Evenly spaced betas from `start` to `end` over `steps` steps.
    pub fn linear(start: f64, end: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("noise schedule needs at least one step"));
        }
        let betas = (0..steps)
            .map(|i| {
                if steps == 1 {
                    start
                } else {
                    start + (end - start) * i as f64 / (steps - 1) as f64
                }
            })
            .collect();
        Self::new(betas)
    }

    /// Number of steps `T`.
    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alpha(&self, t: usize) -> Result<f64> {
        self.check_step(t)?;
        Ok(1.0 - self.betas[t - 1])
    }

    /// Cumulative product of alphas up to step `t`; `t = 0` gives 1.
    pub fn alpha_bar(&self, t: usize) -> Result<f64> {
        if t == 0 {
            return Ok(1.0);
        }
        self.check_step(t)?;
        Ok(self.alpha_bars[t - 1])
    }

    fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.betas.len() {
            return Err(Error::invalid(format!("timestep {t} outside 1..={}", self.betas.len())));
        }
        Ok(())
    }
}

/// One forward noising step: `sqrt(1 - beta) * x_prev + sqrt(beta) * eps`.
pub fn forward_step<T: Real>(x_prev: &Tensor<T>, eps: &Tensor<T>, beta_t: f64) -> Result<Tensor<T>> {
    if !(beta_t > 0.0 && beta_t < 1.0) {
        return Err(Error::invalid(format!("beta {beta_t} is outside (0, 1)")));
    }
    let keep = T::from_f64((1.0 - beta_t).sqrt());
    let noise = T::from_f64(beta_t.sqrt());
    x_prev.zip_map(eps, |x, e| keep * x + noise * e)
}

/// Closed-form marginal `sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps`.
pub fn forward_marginal<T: Real>(
    x0: &Tensor<T>,
    eps: &Tensor<T>,
    t: usize,
    sched: &NoiseSchedule,
) -> Result<Tensor<T>> {
    let abar = sched.alpha_bar(t)?;
    if t == 0 {
        x0.ensure_same_shape(eps)?;
        return Ok(x0.clone());
    }
    let keep = T::from_f64(abar.sqrt());
    let noise = T::from_f64((1.0 - abar).sqrt());
    x0.zip_map(eps, |x, e| keep * x + noise * e)
}

/// Mean squared error between predicted and true noise.
pub fn noise_pred_loss<T: Real>(eps_hat: &Tensor<T>, eps: &Tensor<T>) -> Result<f64> {
    eps.mean_sq_diff(eps_hat)
}

/// A point on the straight path between data and noise, with its velocity
/// target `u = eps - x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RfSample<T = f64> {
    x0: Tensor<T>,
    eps: Tensor<T>,
    t: f64,
    xt: Tensor<T>,
    target: Tensor<T>,
}

impl<T: Real> RfSample<T> {
    pub fn new(x0: Tensor<T>, eps: Tensor<T>, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid(format!("interpolation time {t} outside [0, 1]")));
        }
        let tt = T::from_f64(t);
        let xt = x0.zip_map(&eps, |x, e| (T::one() - tt) * x + tt * e)?;
        let target = eps.zip_map(&x0, |e, x| e - x)?;
        Ok(Self { x0, eps, t, xt, target })
    }

    pub fn x0(&self) -> &Tensor<T> {
        &self.x0
    }

    pub fn eps(&self) -> &Tensor<T> {
        &self.eps
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn xt(&self) -> &Tensor<T> {
        &self.xt
    }

    /// Velocity target `u = eps - x0`.
    pub fn target(&self) -> &Tensor<T> {
        &self.target
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubbandWeights {
    pub ll: f64,
    pub lh: f64,
    pub hl: f64,
    pub hh: f64,
}

impl SubbandWeights {
    pub const UNIFORM: SubbandWeights = SubbandWeights {
        ll: 1.0,
        lh: 1.0,
        hl: 1.0,
        hh: 1.0,
    };

    /// Up-weights detail bands, diagonal detail most.
    pub const HF_EMPHASIS: SubbandWeights = SubbandWeights {
        ll: 1.0,
        lh: 2.0,
        hl: 2.0,
        hh: 4.0,
    };

    pub fn get(&self, b: Subband) -> f64 {
        match b {
            Subband::Ll => self.ll,
            Subband::Lh => self.lh,
            Subband::Hl => self.hl,
            Subband::Hh => self.hh,
        }
    }
}

impl Default for SubbandWeights {
    fn default() -> Self {
        Self::UNIFORM
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Time-dependent scalar weight supplied by the caller.
    pub w_t: f64,
    pub subbands: SubbandWeights,
}

impl LossWeights {
    pub fn new(w_t: f64, subbands: SubbandWeights) -> Result<Self> {
        let w = Self { w_t, subbands };
        w.validate()?;
        Ok(w)
    }

    pub fn uniform(w_t: f64) -> Self {
        Self {
            w_t,
            subbands: SubbandWeights::UNIFORM,
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [
            self.w_t,
            self.subbands.ll,
            self.subbands.lh,
            self.subbands.hl,
            self.subbands.hh,
        ];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid(format!(
                "loss weights must be finite and non-negative: {self:?}"
            )));
        }
        Ok(())
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::uniform(1.0)
    }
}

/// `w_t * mean((u - v_hat)^2)`.
pub fn rf_loss<T: Real>(v_hat: &Tensor<T>, sample: &RfSample<T>, w: &LossWeights) -> Result<f64> {
    w.validate()?;
    Ok(w.w_t * sample.target.mean_sq_diff(v_hat)?)
}

/// Gradient of [`rf_loss`] with respect to `v_hat`.
pub fn rf_loss_grad<T: Real>(v_hat: &Tensor<T>, sample: &RfSample<T>, w: &LossWeights) -> Result<Tensor<f64>> {
    w.validate()?;
    v_hat.ensure_same_shape(&sample.target)?;
    let scale = 2.0 * w.w_t / v_hat.len() as f64;
    let (c, h, wd) = v_hat.shape();
    let data = v_hat
        .data()
        .iter()
        .zip(sample.target.data())
        .map(|(&v, &u)| scale * (v.as_f64() - u.as_f64()))
        .collect();
    Ok(Tensor::from_raw(c, h, wd, data))
}

fn band_sse<T: Real>(a: &SubbandSet<T>, b: &SubbandSet<T>, band: Subband) -> Result<f64> {
    let (x, y) = (a.band(band), b.band(band));
    x.ensure_same_shape(y)?;
    Ok(x.len() as f64 * if x.is_empty() { 0.0 } else { x.mean_sq_diff(y)? })
}

/// Rectified-flow loss in the Haar wavelet domain:
/// `w_t * sum_b w_b * ||dwt(u)_b - dwt(v_hat)_b||^2 / N`, with `N` the
/// element count of `v_hat`. With uniform sub-band weights this equals
/// [`rf_loss`] because the transform is orthonormal.
pub fn wlf_loss<T: Real>(v_hat: &Tensor<T>, sample: &RfSample<T>, w: &LossWeights) -> Result<f64> {
    w.validate()?;
    v_hat.ensure_same_shape(&sample.target)?;
    if v_hat.is_empty() {
        return Err(Error::invalid("loss over an empty tensor"));
    }
    let fu = wavelet::dwt(&sample.target)?;
    let fv = wavelet::dwt(v_hat)?;
    let mut acc = 0.0;
    for band in Subband::ALL {
        let wb = w.subbands.get(band);
        if wb != 0.0 {
            acc += wb * band_sse(&fu, &fv, band)?;
        }
    }
    Ok(w.w_t * acc / v_hat.len() as f64)
}

/// Gradient of [`wlf_loss`] with respect to `v_hat`. The Haar transform is
/// orthogonal, so its adjoint is [`wavelet::idwt`].
pub fn wlf_loss_grad<T: Real>(v_hat: &Tensor<T>, sample: &RfSample<T>, w: &LossWeights) -> Result<Tensor<f64>> {
    w.validate()?;
    v_hat.ensure_same_shape(&sample.target)?;
    let to_f64 = |t: &Tensor<T>| {
        let (c, h, wd) = t.shape();
        Tensor::from_raw(c, h, wd, t.data().iter().map(|v| v.as_f64()).collect())
    };
    let fu = wavelet::dwt(&to_f64(&sample.target))?;
    let fv = wavelet::dwt(&to_f64(v_hat))?;
    let scale = 2.0 * w.w_t / v_hat.len() as f64;
    let weighted = |band: Subband| {
        let wb = w.subbands.get(band);
        fv.band(band).zip_map(fu.band(band), |v, u| scale * wb * (v - u))
    };
    let grad = SubbandSet {
        ll: weighted(Subband::Ll)?,
        lh: weighted(Subband::Lh)?,
        hl: weighted(Subband::Hl)?,
        hh: weighted(Subband::Hh)?,
    };
    wavelet::idwt(&grad)
}

/// Mean of a per-sample loss over a batch, evaluated in parallel with a
/// fixed reduction order.
pub fn batch_mean<S: Sync>(items: &[S], loss: impl Fn(&S) -> Result<f64> + Sync) -> Result<f64> {
    if items.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let values = items.par_iter().map(&loss).collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&values, |v| v) / values.len() as f64)
}

/// Integrates `dx/dt = v(x, t)` from `t = 1` down to `t = 0` with `steps`
/// uniform Euler steps: `x <- x - v(x, t_k) / steps`, `t_k = 1 - k / steps`.
pub fn euler_sample<T: Real>(
    mut velocity: impl FnMut(&Tensor<T>, f64) -> Tensor<T>,
    x_init: &Tensor<T>,
    steps: usize,
) -> Result<Tensor<T>> {
    if steps == 0 {
        return Err(Error::invalid("Euler sampler needs at least one step"));
    }
    let dt = T::from_f64(1.0 / steps as f64);
    let mut x = x_init.clone();
    for k in 0..steps {
        let t = 1.0 - k as f64 / steps as f64;
        let v = velocity(&x, t);
        if v.shape() != x.shape() {
            return Err(Error::invalid(format!(
                "velocity field returned shape {:?} for state {:?}",
                v.shape(),
                x.shape()
            )));
        }
        for (xi, &vi) in x.data_mut().iter_mut().zip(v.data()) {
            *xi = *xi - dt * vi;
        }
        if !x.is_finite() {
            return Err(Error::NumericFailure(format!(
                "non-finite state after Euler step {} (t = {t})",
                k + 1
            )));
        }
    }
    Ok(x)
}
