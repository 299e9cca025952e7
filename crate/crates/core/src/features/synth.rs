//! Synthetic dyadic corpus with a planted interlocutor dependency.
//!
//! Party b is the interlocutor: its face is a smooth AR(1) process and its
//! speech a bursty on/off process. Party a is the avatar: its speech is an
//! independent bursty process and its face follows
//! `F_a[t] = α·F_i[t−L] + γ·S_a[t−L][ENERGY_CHANNEL] + σ_n·ε`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::track::Track;
use crate::{ACOUSTIC_DIM, FACE_DIM};

use super::dataset::{Party, SessionData};

/// Index of the prosodic energy feature within an acoustic frame.
pub const ENERGY_CHANNEL: usize = 28;

/// Per-frame probability of toggling between speech and silence.
const TURN_SWITCH_PROB: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_sessions: usize,
    pub session_len: usize,
    pub mimic_gain: f64,
    pub lag: usize,
    pub noise: f64,
    pub speech_coupling: f64,
    /// AR(1) coefficient of the interlocutor face and acoustic processes.
    pub smoothness: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_sessions: 30,
            session_len: 2400,
            mimic_gain: 0.8,
            lag: 5,
            noise: 0.1,
            speech_coupling: 0.0,
            smoothness: 0.9,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic corpus: {m}")));
        if self.n_sessions == 0 {
            return bad("n_sessions must be positive");
        }
        if self.lag < 1 {
            return bad("lag must be at least 1");
        }
        if self.session_len <= self.lag {
            return bad("session_len must exceed lag");
        }
        if !(0.0..1.0).contains(&self.smoothness) {
            return bad("smoothness must lie in [0, 1)");
        }
        if self.noise < 0.0 || !self.noise.is_finite() {
            return bad("noise must be finite and non-negative");
        }
        if !self.mimic_gain.is_finite() || !self.speech_coupling.is_finite() {
            return bad("gains must be finite");
        }
        Ok(())
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Stationary unit-variance AR(1) per channel.
fn smooth_process<R: Rng + ?Sized>(dim: usize, len: usize, rho: f64, rng: &mut R) -> Track {
    let innov = (1.0 - rho * rho).sqrt();
    let mut state: Vec<f64> = (0..dim).map(|_| normal(rng)).collect();
    let mut out = Track::zeros(dim, len);
    for t in 0..len {
        for (c, s) in state.iter_mut().enumerate() {
            *s = rho * *s + innov * normal(rng);
            out.frame_mut(t)[c] = *s;
        }
    }
    out
}

/// Speech-like acoustic track: a two-state talk/silence chain scales
/// smooth spectral noise, and the energy channel carries the state.
fn bursty_speech<R: Rng + ?Sized>(len: usize, rho: f64, rng: &mut R) -> Track {
    let mut out = smooth_process(ACOUSTIC_DIM, len, rho, rng);
    let mut talking = rng.random_bool(0.5);
    for t in 0..len {
        if rng.random_bool(TURN_SWITCH_PROB) {
            talking = !talking;
        }
        let f = out.frame_mut(t);
        let gain = if talking { 1.0 } else { 0.2 };
        for v in f.iter_mut() {
            *v *= gain;
        }
        f[ENERGY_CHANNEL] = if talking { 1.0 } else { -1.0 } + 0.1 * normal(rng);
    }
    out
}

pub fn generate_synthetic_corpus<R: Rng + ?Sized>(cfg: &SynthConfig, rng: &mut R) -> Result<Vec<SessionData>> {
    cfg.validate()?;
    let (n, lag) = (cfg.session_len, cfg.lag);
    let mut sessions = Vec::with_capacity(cfg.n_sessions);
    for s in 0..cfg.n_sessions {
        // Interlocutor face and avatar speech get `lag` frames of pre-roll.
        let face_i = smooth_process(FACE_DIM, n + lag, cfg.smoothness, rng);
        let speech_a = bursty_speech(n + lag, cfg.smoothness, rng);
        let speech_i = bursty_speech(n, cfg.smoothness, rng);
        let mut face_a = Track::zeros(FACE_DIM, n);
        for t in 0..n {
            let src = face_i.frame(t);
            let e = speech_a.frame(t)[ENERGY_CHANNEL];
            for (c, v) in face_a.frame_mut(t).iter_mut().enumerate() {
                *v = cfg.mimic_gain * src[c] + cfg.speech_coupling * e;
                if cfg.noise > 0.0 {
                    *v += cfg.noise * normal(rng);
                }
            }
        }
        sessions.push(SessionData {
            id: format!("synth{s:03}"),
            party_a: Party { face: face_a, acoustic: speech_a.slice(lag, n) },
            party_b: Party { face: face_i.slice(lag, n), acoustic: speech_i },
        });
    }
    Ok(sessions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_lagged_copy() {
        let cfg = SynthConfig {
            n_sessions: 2,
            session_len: 50,
            mimic_gain: 1.0,
            lag: 3,
            noise: 0.0,
            speech_coupling: 0.0,
            ..Default::default()
        };
        let s = generate_synthetic_corpus(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for sess in &s {
            sess.validate(FACE_DIM, ACOUSTIC_DIM).unwrap();
            for t in 3..50 {
                assert_eq!(sess.party_a.face.frame(t), sess.party_b.face.frame(t - 3));
            }
        }
    }

    #[test]
    fn invalid_configs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for cfg in [
            SynthConfig { lag: 0, ..Default::default() },
            SynthConfig { session_len: 5, lag: 5, ..Default::default() },
            SynthConfig { noise: -1.0, ..Default::default() },
            SynthConfig { smoothness: 1.0, ..Default::default() },
        ] {
            assert!(generate_synthetic_corpus(&cfg, &mut rng).is_err());
        }
    }

    #[test]
    fn speech_coupling_drives_every_channel() {
        let cfg = SynthConfig {
            n_sessions: 1,
            session_len: 40,
            mimic_gain: 0.0,
            lag: 2,
            noise: 0.0,
            speech_coupling: 0.5,
            ..Default::default()
        };
        let s = &generate_synthetic_corpus(&cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap()[0];
        for t in 2..40 {
            let e = s.party_a.acoustic.frame(t - 2)[ENERGY_CHANNEL];
            assert!(s.party_a.face.frame(t).iter().all(|&v| (v - 0.5 * e).abs() < 1e-15));
        }
    }
}
