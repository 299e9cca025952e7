use crate::error::Result;
use crate::track::Track;

use super::mfcc::{MfccExtractor, ENERGY_FLOOR};
use super::AudioSignal;

pub const PITCH_WINDOW_SECONDS: f64 = 0.04;
pub const PITCH_MIN_HZ: f64 = 75.0;
pub const PITCH_MAX_HZ: f64 = 500.0;
/// Minimum normalized autocorrelation at the chosen lag for a voiced frame.
pub const VOICING_THRESHOLD: f64 = 0.45;

/// Pitch, pitch delta, energy, energy delta on the MFCC frame grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Prosody {
    pub features: Track,
    pub voiced: Vec<bool>,
}

/// Autocorrelation pitch estimate of one window; `None` when unvoiced.
pub fn estimate_pitch(window: &[f64], sample_rate: u32) -> Option<f64> {
    let n = window.len();
    let mean = window.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = window.iter().map(|v| v - mean).collect();
    let r0: f64 = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if r0 <= ENERGY_FLOOR {
        return None;
    }
    let sr = sample_rate as f64;
    let lo = (sr / PITCH_MAX_HZ).ceil() as usize;
    let hi = ((sr / PITCH_MIN_HZ).floor() as usize).min(n - 2);
    if lo + 2 > hi {
        return None;
    }
    // Unbiased, normalized autocorrelation over lo-1..=hi+1.
    let r: Vec<f64> = (lo - 1..=hi + 1)
        .map(|tau| {
            let s: f64 = x[..n - tau].iter().zip(&x[tau..]).map(|(a, b)| a * b).sum();
            s / (n - tau) as f64 / r0
        })
        .collect();
    let at = |tau: usize| r[tau + 1 - lo];
    let best = (lo..=hi).map(at).fold(f64::NEG_INFINITY, f64::max);
    // Smallest-lag local maximum close to the global best avoids octave errors.
    let tau = (lo..=hi).find(|&t| at(t) >= 0.9 * best && at(t) >= at(t - 1) && at(t) >= at(t + 1))?;
    if at(tau) < VOICING_THRESHOLD {
        return None;
    }
    let (a, b, c) = (at(tau - 1), at(tau), at(tau + 1));
    let denom = a - 2.0 * b + c;
    let delta = if denom.abs() > 1e-12 { 0.5 * (a - c) / denom } else { 0.0 };
    Some(sr / (tau as f64 + delta))
}

fn central_delta(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 >= n {
                0.0
            } else {
                (v[i + 1] - v[i - 1]) / 2.0
            }
        })
        .collect()
}

/// Prosodic features aligned with [`super::compute_mfcc_energy`]: each
/// 40 ms analysis window is centred on the corresponding 20 ms MFCC frame
/// and zero-padded past the signal edges.
pub fn compute_prosody(audio: &AudioSignal) -> Result<Prosody> {
    let grid = MfccExtractor::new(audio.sample_rate)?;
    let n_frames = super::num_frames(audio.samples.len(), grid.frame_len, grid.hop);
    let win = (PITCH_WINDOW_SECONDS * audio.sample_rate as f64).round() as usize;
    let mut pitch = Vec::with_capacity(n_frames);
    let mut energy = Vec::with_capacity(n_frames);
    let mut voiced = Vec::with_capacity(n_frames);
    let mut buf = vec![0.0; win];
    for i in 0..n_frames {
        let center = (i * grid.hop + grid.frame_len / 2) as isize;
        let start = center - (win / 2) as isize;
        for (k, b) in buf.iter_mut().enumerate() {
            let idx = start + k as isize;
            *b = if idx >= 0 && (idx as usize) < audio.samples.len() {
                audio.samples[idx as usize]
            } else {
                0.0
            };
        }
        let p = estimate_pitch(&buf, audio.sample_rate);
        voiced.push(p.is_some());
        pitch.push(p.unwrap_or(0.0));
        let e: f64 = buf.iter().map(|v| v * v).sum();
        energy.push(e.max(ENERGY_FLOOR).ln());
    }
    let dp = central_delta(&pitch);
    let de = central_delta(&energy);
    let features = Track::from_frames(
        4,
        (0..n_frames).map(|i| [pitch[i], dp[i], energy[i], de[i]]),
    )?;
    Ok(Prosody { features, voiced })
}
