use crate::error::{Error, Result};

use super::AudioSignal;

/// Energy-based crosstalk VAD settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VadConfig {
    pub frame_seconds: f64,
    /// Absolute activity floor in dB (relative to full scale).
    pub floor_db: f64,
    /// A channel stays active while within this many dB of the other.
    pub margin_db: f64,
}

impl Default for VadConfig {
    fn default() -> Self {
        Self {
            frame_seconds: 0.04,
            floor_db: -50.0,
            margin_db: 6.0,
        }
    }
}

fn frame_db(samples: &[f64], frame_len: usize) -> Vec<f64> {
    samples
        .chunks_exact(frame_len)
        .map(|f| {
            let ms = f.iter().map(|v| v * v).sum::<f64>() / frame_len as f64;
            10.0 * (ms + 1e-10).log10()
        })
        .collect()
}

/// Per-frame (25 fps) activity masks for two close-talk channels. A channel
/// is active when its level clears the floor and is no more than the margin
/// below the other channel, which suppresses crosstalk.
pub fn vad_mask(a1: &AudioSignal, a2: &AudioSignal, cfg: &VadConfig) -> Result<(Vec<bool>, Vec<bool>)> {
    if a1.sample_rate != a2.sample_rate || a1.samples.len() != a2.samples.len() {
        return Err(Error::Dimension {
            context: "VAD channel duration",
            expected: a1.samples.len(),
            got: a2.samples.len(),
        });
    }
    let frame_len = (cfg.frame_seconds * a1.sample_rate as f64).round() as usize;
    let e1 = frame_db(&a1.samples, frame_len);
    let e2 = frame_db(&a2.samples, frame_len);
    let active = |a: f64, b: f64| a > cfg.floor_db && a > b - cfg.margin_db;
    let m1 = e1.iter().zip(&e2).map(|(&a, &b)| active(a, b)).collect();
    let m2 = e2.iter().zip(&e1).map(|(&a, &b)| active(a, b)).collect();
    Ok((m1, m2))
}
