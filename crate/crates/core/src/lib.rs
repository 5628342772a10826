//! Pixel-level pseudo masks for infrared small targets from single-point
//! labels, by Monte Carlo regularized linear clustering.
//!
//! The pipeline for one labeled target is
//! [`run_mclc`](monte_carlo::run_mclc) (K noisy clusterings accumulated into
//! a target probability map), then either
//! [`binarize`](monte_carlo::binarize) or the windowed dense-CRF
//! [`refine_tpm`](refine::refine_tpm).

pub mod annotation;
pub mod cli;
pub mod clustering;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod imaging;
pub mod manifest;
pub mod mask;
pub mod metrics;
pub mod monte_carlo;
pub mod pipeline;
pub mod plot;
pub mod refine;
pub mod synth;

pub use annotation::{PointAnnotation, TargetCategory};
pub use error::{Error, Result};
pub use imaging::{InfraredImage, NoiseKind, NoiseSpec};
pub use mask::PseudoMask;
pub use monte_carlo::{MclcParams, TargetProbabilityMap};
pub use refine::CrfParams;
