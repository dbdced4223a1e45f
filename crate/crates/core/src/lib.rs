//! Core library for `wavemod`: learnable wavelet frequency modulation of
//! training targets coupled to a differentiable 2D Gaussian splatting
//! trainer.
//!
//! The pipeline in one sentence: a single-level Haar transform with a
//! learnable high-pass decides how much fine detail the training target
//! carries; a 2D Gaussian cloud is fitted against that target; and an
//! adaptive weight hands detail back as the fit improves, so the Gaussian
//! count grows coarse-to-fine instead of chasing high frequencies from the
//! start.
//!
//! Modules:
//! - [`image`] — float image container, PNG/PPM codecs, synthetic test scene
//! - [`wavelet`] — strided Haar analysis/synthesis and subband energies
//! - [`learnable`] — the learnable high-pass pair, its losses and gradients
//! - [`splat`] — differentiable 2D Gaussian splatting with density control
//! - [`loss`] — L1, SSIM/D-SSIM, the combined photometric loss, PSNR
//! - [`adam`] — bias-corrected Adam moments over flat parameter vectors
//! - [`trainer`] — the three training regimes, metrics, comparison runs
//! - [`check`] — finite-difference verification of every gradient path

pub mod adam;
pub mod check;
pub mod error;
pub mod image;
pub mod learnable;
pub mod loss;
pub mod splat;
pub mod trainer;
pub mod wavelet;

pub use error::{Error, Result};
