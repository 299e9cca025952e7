#![allow(dead_code)]

use dyadflow::model::DyadSequence;
use dyadflow::{ModelConfig, Track};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn random_track<R: Rng>(dim: usize, len: usize, rng: &mut R) -> Track {
    Track::new(dim, normal_vec(dim * len, rng)).unwrap()
}

pub fn random_sequence(cfg: &ModelConfig, len: usize, seed: u64) -> DyadSequence {
    let mut r = rng(seed);
    DyadSequence {
        avatar_face: random_track(cfg.face_dim, len, &mut r),
        avatar_speech: random_track(cfg.acoustic_dim, len, &mut r),
        interlocutor_speech: random_track(cfg.acoustic_dim, len, &mut r),
        interlocutor_face: random_track(cfg.face_dim, len, &mut r),
    }
}

/// A model small enough to train thousands of batches in a test.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        face_dim: 4,
        acoustic_dim: 2,
        flow_steps: 2,
        hidden_channels: 8,
        cond_dim: 4,
        avatar_speech_frames: 2,
        interlocutor_speech_frames: 2,
        interlocutor_face_frames: 2,
        face_history_frames: 2,
        gru_layers: 1,
        gru_hidden: 3,
        ..ModelConfig::default()
    }
}

/// Desk-scale configuration for training on the synthetic corpus. The
/// interlocutor-face window covers the planted lag of 5 frames.
pub fn desk_config() -> ModelConfig {
    ModelConfig {
        flow_steps: 4,
        hidden_channels: 32,
        cond_dim: 32,
        avatar_speech_frames: 4,
        interlocutor_speech_frames: 4,
        interlocutor_face_frames: 8,
        face_history_frames: 5,
        gru_layers: 1,
        gru_hidden: 16,
        ..ModelConfig::default()
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Freshly built model with actnorm fitted to random sequences, ready to
/// score and sample.
pub fn ready_model(cfg: ModelConfig, seed: u64) -> dyadflow::DyadFlowModel {
    let data: Vec<DyadSequence> = (0..4).map(|i| random_sequence(&cfg, 30, 1000 + i)).collect();
    let mut m = dyadflow::DyadFlowModel::new(cfg, seed).unwrap();
    m.initialize_actnorm(&data, 120).unwrap();
    m
}
