use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("actnorm initialization failed: channel {channel} has zero variance")]
    DegenerateChannel { channel: usize },

    #[error("actnorm layer used before initialization")]
    Uninitialized,

    #[error("non-finite value in flow step {step}")]
    NonFiniteStep { step: usize },

    #[error("non-finite gradient in parameter group `{group}`")]
    NonFiniteGradient { group: String },

    #[error("non-finite input feature in {context}")]
    NonFiniteInput { context: &'static str },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("no derangement exists for n = {0}; need at least 2 elements")]
    NoDerangement(usize),

    #[error("ablation mismatch: {0}")]
    Ablation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("feature file {path}: {msg}")]
    FeatureFile { path: PathBuf, msg: String },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),
}
