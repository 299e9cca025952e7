//! Probabilistic, interlocutor-aware facial gesture generation.
//!
//! The core model is an autoregressive conditional normalizing flow over
//! per-frame facial feature vectors (56D: 50 expression coefficients, neck
//! and jaw rotations). Each frame is conditioned on recurrent encodings of
//! the avatar's own speech, the interlocutor's speech and face, and the
//! avatar's preceding frames. Training is exact maximum likelihood with
//! teacher forcing plus a mismatched-conditioning (negative batch) scheme.
//!
//! Module map:
//! - [`flow`]: actnorm, LU-parameterized invertible linear maps, affine
//!   coupling, the stacked Glow transform and its exact gradients.
//! - [`encoders`]: GRU modality encoders and per-step conditioning.
//! - [`model`]: the full dyadic model, sequence likelihood and sampling.
//! - [`trainer`]: Adam, warmup, derangements, negative batches, checkpoints.
//! - [`features`]: acoustic front-end, smoothing, VAD, datasets, synthetic corpus.
//! - [`eval`]: mismatched-conditioning log-likelihood tables.

pub mod config;
pub mod encoders;
pub mod error;
pub mod eval;
pub mod features;
pub mod flow;
pub mod gradcheck;
pub mod model;
pub mod nn;
pub mod params;
pub mod real;
pub mod stats;
pub mod track;
pub mod trainer;

pub use error::{Error, Result};
pub use model::{DyadFlowModel, GenerationConfig, ModelConfig};
pub use track::Track;

/// Facial feature dimensionality: 50 expression + 3 neck + 3 jaw.
pub const FACE_DIM: usize = 56;
/// Acoustic feature dimensionality: 25 MFCC + log energy + 4 prosodic.
pub const ACOUSTIC_DIM: usize = 30;
/// Video frame rate all tracks are aligned to.
pub const FPS: usize = 25;
