use std::path::Path;

use crate::error::{Error, Result};

/// Default working sample rate; imported audio is resampled to it.
pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFiniteInput { context: "audio samples" });
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Reads a 16-bit PCM mono WAV file and resamples it to 16 kHz.
    pub fn read_wav(path: &Path) -> Result<Self> {
        let mut reader = hound::WavReader::open(path)?;
        let spec = reader.spec();
        if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
            return Err(Error::FeatureFile {
                path: path.to_path_buf(),
                msg: format!(
                    "expected 16-bit PCM mono, got {} channel(s), {} bits, {:?}",
                    spec.channels, spec.bits_per_sample, spec.sample_format
                ),
            });
        }
        let samples = reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self::new(samples, spec.sample_rate)?.resampled(DEFAULT_SAMPLE_RATE))
    }

    /// Linear-interpolation resampling.
    pub fn resampled(&self, rate: u32) -> Self {
        if rate == self.sample_rate || self.samples.is_empty() {
            return Self {
                samples: self.samples.clone(),
                sample_rate: rate,
            };
        }
        let ratio = self.sample_rate as f64 / rate as f64;
        let n = ((self.samples.len() as f64) / ratio).floor() as usize;
        let last = self.samples.len() - 1;
        let samples = (0..n)
            .map(|i| {
                let pos = i as f64 * ratio;
                let k = (pos.floor() as usize).min(last);
                let frac = pos - k as f64;
                let next = self.samples[(k + 1).min(last)];
                self.samples[k] * (1.0 - frac) + next * frac
            })
            .collect();
        Self {
            samples,
            sample_rate: rate,
        }
    }
}
