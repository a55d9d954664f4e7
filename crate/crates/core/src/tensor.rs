//! Dense channels-first real tensors.

use std::fmt::Debug;

use num_traits::Float;

use crate::error::{Error, Result};

/// Element type for [`Tensor`]. Implemented for `f32` and `f64`.
pub trait Real: Float + Debug + Send + Sync + 'static {
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// `channels x height x width` tensor stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T = f64> {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::invalid(format!(
                "tensor buffer has {} elements, expected {channels}x{height}x{width}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("tensor element {pos} is not finite")));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self::full(channels, height, width, T::zero())
    }

    pub fn full(channels: usize, height: usize, width: usize, value: T) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self::new(channels, height, width, data)
    }

    /// Builds a tensor without the finiteness scan. Callers guarantee the
    /// buffer length.
    pub(crate) fn from_raw(channels: usize, height: usize, width: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), channels * height * width);
        Self {
            channels,
            height,
            width,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> T {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: T) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_raw(
            self.channels,
            self.height,
            self.width,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.ensure_same_shape(other)?;
        Ok(Self::from_raw(
            self.channels,
            self.height,
            self.width,
            self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::invalid(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    pub fn sum_squares(&self) -> f64 {
        pairwise_sum(&self.data, |v| {
            let v = v.as_f64();
            v * v
        })
    }

    /// Inner product accumulated in f64.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.ensure_same_shape(other)?;
        Ok(pairwise_sum_zip(&self.data, &other.data, |a, b| {
            a.as_f64() * b.as_f64()
        }))
    }

    /// Mean of squared element differences, accumulated in f64.
    pub fn mean_sq_diff(&self, other: &Self) -> Result<f64> {
        self.ensure_same_shape(other)?;
        if self.data.is_empty() {
            return Err(Error::invalid("mean over an empty tensor"));
        }
        let sse = pairwise_sum_zip(&self.data, &other.data, |a, b| {
            let d = a.as_f64() - b.as_f64();
            d * d
        });
        Ok(sse / self.data.len() as f64)
    }
}

const PAIRWISE_LEAF: usize = 128;

/// Pairwise (cascade) summation. The association order depends only on the
/// slice length, so results are reproducible.
pub fn pairwise_sum<T: Copy>(xs: &[T], f: impl Fn(T) -> f64 + Copy) -> f64 {
    if xs.len() <= PAIRWISE_LEAF {
        return xs.iter().fold(0.0, |acc, &v| acc + f(v));
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid], f) + pairwise_sum(&xs[mid..], f)
}

pub(crate) fn pairwise_sum_zip<T: Copy>(a: &[T], b: &[T], f: impl Fn(T, T) -> f64 + Copy) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= PAIRWISE_LEAF {
        return a.iter().zip(b).fold(0.0, |acc, (&x, &y)| acc + f(x, y));
    }
    let mid = a.len() / 2;
    pairwise_sum_zip(&a[..mid], &b[..mid], f) + pairwise_sum_zip(&a[mid..], &b[mid..], f)
}
