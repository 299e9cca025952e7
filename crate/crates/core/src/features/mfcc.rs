use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::track::Track;

use super::AudioSignal;

pub const FRAME_SECONDS: f64 = 0.02;
pub const HOP_SECONDS: f64 = 0.01;
pub const NFFT: usize = 1024;
pub const N_FILTERS: usize = 26;
pub const N_CEPSTRA: usize = 25;
pub const PRE_EMPHASIS: f64 = 0.97;
/// Floor applied before every logarithm.
pub const ENERGY_FLOOR: f64 = 1e-10;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Number of full frames of `frame_len` samples at hop `hop`.
pub fn num_frames(n_samples: usize, frame_len: usize, hop: usize) -> usize {
    if n_samples < frame_len {
        0
    } else {
        1 + (n_samples - frame_len) / hop
    }
}

/// Triangular filters equally spaced on the mel scale from 0 Hz to Nyquist.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// `n_filters × (nfft/2 + 1)` weights.
    pub weights: Vec<Vec<f64>>,
    pub centers_hz: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(n_filters: usize, nfft: usize, sample_rate: u32) -> Self {
        let sr = sample_rate as f64;
        let lo = hz_to_mel(0.0);
        let hi = hz_to_mel(sr / 2.0);
        let points: Vec<f64> = (0..n_filters + 2)
            .map(|i| lo + (hi - lo) * i as f64 / (n_filters + 1) as f64)
            .collect();
        let bins: Vec<usize> = points
            .iter()
            .map(|&m| (((nfft + 1) as f64) * mel_to_hz(m) / sr).floor() as usize)
            .collect();
        let n_bins = nfft / 2 + 1;
        let weights = (0..n_filters)
            .map(|j| {
                let (l, c, r) = (bins[j], bins[j + 1], bins[j + 2]);
                let mut w = vec![0.0; n_bins];
                for k in l..c.min(n_bins) {
                    w[k] = (k - l) as f64 / (c - l) as f64;
                }
                for k in c..r.min(n_bins) {
                    w[k] = (r - k) as f64 / (r - c) as f64;
                }
                w
            })
            .collect();
        let centers_hz = points[1..=n_filters].iter().map(|&m| mel_to_hz(m)).collect();
        Self { weights, centers_hz }
    }

    pub fn apply(&self, spectrum: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| w.iter().zip(spectrum).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Per-frame cepstral and energy features at 100 fps.
pub struct MfccExtractor {
    pub sample_rate: u32,
    pub frame_len: usize,
    pub hop: usize,
    pub filterbank: MelFilterbank,
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
}

impl MfccExtractor {
    pub fn new(sample_rate: u32) -> Result<Self> {
        if sample_rate < 8000 {
            return Err(Error::Config(format!(
                "sample rate {sample_rate} Hz is below the 8000 Hz minimum"
            )));
        }
        let frame_len = (FRAME_SECONDS * sample_rate as f64).round() as usize;
        let hop = (HOP_SECONDS * sample_rate as f64).round() as usize;
        let window = (0..frame_len)
            .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (frame_len - 1) as f64).cos())
            .collect();
        Ok(Self {
            sample_rate,
            frame_len,
            hop,
            filterbank: MelFilterbank::new(N_FILTERS, NFFT, sample_rate),
            fft: FftPlanner::new().plan_fft_forward(NFFT),
            window,
        })
    }

    /// Magnitude spectrum (`NFFT/2 + 1` bins) of a pre-emphasized,
    /// Hamming-windowed frame.
    pub fn magnitude_spectrum(&self, frame: &[f64]) -> Vec<f64> {
        let mut buf = vec![Complex::new(0.0, 0.0); NFFT];
        for n in 0..frame.len().min(NFFT) {
            let pre = if n == 0 {
                frame[0]
            } else {
                frame[n] - PRE_EMPHASIS * frame[n - 1]
            };
            buf[n].re = pre * self.window[n];
        }
        self.fft.process(&mut buf);
        buf[..NFFT / 2 + 1].iter().map(|c| c.norm()).collect()
    }

    pub fn filterbank_energies(&self, frame: &[f64]) -> Vec<f64> {
        self.filterbank.apply(&self.magnitude_spectrum(frame))
    }

    /// 25 cepstra (orthonormal DCT-II coefficients 1..=25 of the log
    /// filterbank energies) followed by the log total frame energy.
    pub fn frame_features(&self, frame: &[f64]) -> Vec<f64> {
        let log_fb: Vec<f64> = self
            .filterbank_energies(frame)
            .into_iter()
            .map(|e| e.max(ENERGY_FLOOR).ln())
            .collect();
        let n = log_fb.len() as f64;
        let mut out: Vec<f64> = (1..=N_CEPSTRA)
            .map(|k| {
                let s: f64 = log_fb
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| v * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos())
                    .sum();
                s * (2.0 / n).sqrt()
            })
            .collect();
        let energy: f64 = frame.iter().map(|v| v * v).sum();
        out.push(energy.max(ENERGY_FLOOR).ln());
        out
    }

    pub fn extract(&self, samples: &[f64]) -> Track {
        let n = num_frames(samples.len(), self.frame_len, self.hop);
        let mut track = Track::zeros(N_CEPSTRA + 1, 0);
        for i in 0..n {
            let start = i * self.hop;
            track.push(&self.frame_features(&samples[start..start + self.frame_len]));
        }
        track
    }
}

/// 26D features (25 MFCC + log energy) on a 10 ms grid.
pub fn compute_mfcc_energy(audio: &AudioSignal) -> Result<Track> {
    Ok(MfccExtractor::new(audio.sample_rate)?.extract(&audio.samples))
}
