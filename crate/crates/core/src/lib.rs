//! Texture-richness metrics, wavelet-domain training losses and dataset
//! curation tooling for ultra-high-resolution image synthesis.
//!
//! The local metrics ([`glcm::glcm_score`] and
//! [`jpeg::compression_ratio`]) operate on 8-bit images and are assembled
//! into per-image reports by [`report`]. The loss kernels in [`diffusion`]
//! and [`vae`] operate on dense [`Tensor`]s and are intended to be checked
//! against, or embedded in, external training code.

pub mod curation;
pub mod diffusion;
pub mod error;
pub mod glcm;
pub mod io;
pub mod jpeg;
pub mod pixel;
pub mod report;
pub mod stats;
pub mod synth;
pub mod tensor;
pub mod vae;
pub mod wavelet;

pub use error::{Error, Result};
pub use pixel::{GrayImage, GrayPatch, RgbImage};
pub use tensor::{Real, Tensor};
