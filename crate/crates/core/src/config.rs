//! Application configuration file.
//!
//! TOML with one table per module; every key is optional and falls back to
//! the defaults below.
//!
//! ```toml
//! [model]
//! flow_steps = 16
//! hidden_channels = 128
//! cond_dim = 512
//!
//! [train]
//! initial_lr = 1e-5
//! batch_size = 16
//!
//! [data]
//! segment_frames = 1500
//!
//! [synth]
//! mimic_gain = 0.8
//!
//! [generate]
//! temperature = 1.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{SplitProportions, SynthConfig, Windowing};
use crate::model::ModelConfig;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Segment length used when splitting sessions (one minute at 25 fps).
    pub segment_frames: usize,
    pub train_fraction: f64,
    pub val_fraction: f64,
    /// Fixed-stride evaluation windows.
    pub window_length: usize,
    pub window_stride: usize,
    pub split_seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            segment_frames: 1500,
            train_fraction: 0.83,
            val_fraction: 0.10,
            window_length: 80,
            window_stride: 40,
            split_seed: 0,
        }
    }
}

impl DataConfig {
    pub fn proportions(&self) -> SplitProportions {
        SplitProportions { train: self.train_fraction, val: self.val_fraction }
    }

    pub fn windowing(&self) -> Windowing {
        Windowing { length: self.window_length, stride: self.window_stride }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub temperature: f64,
    /// Ground-truth frames copied before sampling starts.
    pub init_frames: usize,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self { temperature: 1.0, init_frames: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub data: DataConfig,
    pub synth: SynthConfig,
    pub generate: GenerateConfig,
}

impl AppConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: AppConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate(self.model.face_history_frames)?;
        self.synth.validate()?;
        let d = &self.data;
        if d.segment_frames == 0 || d.window_length == 0 || d.window_stride == 0 {
            return Err(Error::Config("data segment and window sizes must be positive".into()));
        }
        if d.train_fraction < 0.0 || d.val_fraction < 0.0 || d.train_fraction + d.val_fraction > 1.0 {
            return Err(Error::Config("split fractions must be non-negative and sum to at most 1".into()));
        }
        if !(self.generate.temperature >= 0.0) {
            return Err(Error::Config("temperature must be >= 0".into()));
        }
        Ok(())
    }
}
