//! Single-level orthonormal 2D Haar transform.
//!
//! With low-pass `L = [1, 1]/sqrt(2)` and high-pass `H = [-1, 1]/sqrt(2)`,
//! a 2x2 block `[[a, b], [c, d]]` maps to
//!
//! ```text
//! ll = ( a + b + c + d) / 2
//! lh = (-a + b - c + d) / 2   vertical L, horizontal H (detail along width)
//! hl = (-a - b + c + d) / 2   vertical H, horizontal L (detail along height)
//! hh = ( a - b - c + d) / 2
//! ```
//!
//! The map is its own inverse up to a transpose of the 4x4 kernel matrix,
//! so [`dwt`] preserves inner products (Parseval) and [`idwt`] inverts it
//! exactly in real arithmetic.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet<T = f64> {
    pub ll: Tensor<T>,
    pub lh: Tensor<T>,
    pub hl: Tensor<T>,
    pub hh: Tensor<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subband {
    Ll,
    Lh,
    Hl,
    Hh,
}

impl Subband {
    pub const ALL: [Subband; 4] = [Subband::Ll, Subband::Lh, Subband::Hl, Subband::Hh];

    pub fn name(self) -> &'static str {
        match self {
            Subband::Ll => "ll",
            Subband::Lh => "lh",
            Subband::Hl => "hl",
            Subband::Hh => "hh",
        }
    }
}

impl<T: Real> SubbandSet<T> {
    pub fn band(&self, b: Subband) -> &Tensor<T> {
        match b {
            Subband::Ll => &self.ll,
            Subband::Lh => &self.lh,
            Subband::Hl => &self.hl,
            Subband::Hh => &self.hh,
        }
    }

    pub fn bands(&self) -> [&Tensor<T>; 4] {
        [&self.ll, &self.lh, &self.hl, &self.hh]
    }

    fn validate(&self) -> Result<()> {
        let shape = self.ll.shape();
        for b in [&self.lh, &self.hl, &self.hh] {
            if b.shape() != shape {
                return Err(Error::invalid(format!(
                    "sub-band shape mismatch: {:?} vs {:?}",
                    shape,
                    b.shape()
                )));
            }
        }
        Ok(())
    }

    /// Sum over sub-bands of squared norms.
    pub fn sum_squares(&self) -> f64 {
        self.bands().iter().map(|b| b.sum_squares()).sum()
    }

    /// Inner product summed over the four sub-bands.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        let mut acc = 0.0;
        for b in Subband::ALL {
            acc += self.band(b).dot(other.band(b))?;
        }
        Ok(acc)
    }
}

pub fn dwt<T: Real>(x: &Tensor<T>) -> Result<SubbandSet<T>> {
    let (channels, height, width) = x.shape();
    if height % 2 != 0 || width % 2 != 0 {
        return Err(Error::invalid(format!(
            "DWT needs even spatial dimensions, got {height}x{width}"
        )));
    }
    let (h2, w2) = (height / 2, width / 2);
    let half = T::from_f64(0.5);
    let plane = h2 * w2;
    let mut bands = [(); 4].map(|_| vec![T::zero(); channels * plane]);
    let src = x.data();

    {
        let [ll, lh, hl, hh] = &mut bands;
        // One output row of every band per task.
        ll.par_chunks_mut(w2.max(1))
            .zip(lh.par_chunks_mut(w2.max(1)))
            .zip(hl.par_chunks_mut(w2.max(1)))
            .zip(hh.par_chunks_mut(w2.max(1)))
            .enumerate()
            .for_each(|(row, (((ll, lh), hl), hh))| {
                let (c, i) = (row / h2.max(1), row % h2.max(1));
                let top = (c * height + 2 * i) * width;
                let bottom = top + width;
                for j in 0..w2 {
                    let a = src[top + 2 * j];
                    let b = src[top + 2 * j + 1];
                    let cc = src[bottom + 2 * j];
                    let d = src[bottom + 2 * j + 1];
                    ll[j] = (a + b + cc + d) * half;
                    lh[j] = (b - a + d - cc) * half;
                    hl[j] = (cc + d - a - b) * half;
                    hh[j] = (a - b - cc + d) * half;
                }
            });
    }

    let [ll, lh, hl, hh] = bands;
    Ok(SubbandSet {
        ll: Tensor::from_raw(channels, h2, w2, ll),
        lh: Tensor::from_raw(channels, h2, w2, lh),
        hl: Tensor::from_raw(channels, h2, w2, hl),
        hh: Tensor::from_raw(channels, h2, w2, hh),
    })
}

pub fn idwt<T: Real>(s: &SubbandSet<T>) -> Result<Tensor<T>> {
    s.validate()?;
    let (channels, h2, w2) = s.ll.shape();
    let (height, width) = (2 * h2, 2 * w2);
    let half = T::from_f64(0.5);
    let mut out = vec![T::zero(); channels * height * width];
    let (ll, lh, hl, hh) = (s.ll.data(), s.lh.data(), s.hl.data(), s.hh.data());

    // Two output rows per task.
    out.par_chunks_mut((2 * width).max(1))
        .enumerate()
        .for_each(|(row, rows)| {
            let (top, bottom) = rows.split_at_mut(width);
            let base = row * w2;
            for j in 0..w2 {
                let k = base + j;
                let (l0, l1, l2, l3) = (ll[k], lh[k], hl[k], hh[k]);
                top[2 * j] = (l0 - l1 - l2 + l3) * half;
                top[2 * j + 1] = (l0 + l1 - l2 - l3) * half;
                bottom[2 * j] = (l0 - l1 + l2 - l3) * half;
                bottom[2 * j + 1] = (l0 + l1 + l2 + l3) * half;
            }
        });

    Ok(Tensor::from_raw(channels, height, width, out))
}
