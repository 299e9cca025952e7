//! Modality encoders and per-step conditioning.

mod conditioning;
mod gru;

pub use conditioning::{Ablation, ConditioningCache, ConditioningEncoder, ConditioningSet, EncoderShape};
pub use gru::{Gru, GruCache, GruLayer};

/// Conditioning stream a window belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    AvatarSpeech,
    InterlocutorSpeech,
    InterlocutorFace,
}

/// A history window of one modality, flattened frame-major.
#[derive(Debug, Clone, Copy)]
pub struct ModalityWindow<'a> {
    pub modality: Modality,
    pub frames: &'a [f64],
}
