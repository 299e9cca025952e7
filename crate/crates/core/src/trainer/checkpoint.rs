//! Versioned binary checkpoint container.
//!
//! ```text
//! magic "DYADFLW\0" | u32 version | 32-byte SHA-256 of the config text
//! u32 config length | config text (TOML: [model] and [train])
//! u64 epoch | u64 batch_in_epoch | u64 epoch_seed | u64 batches_seen
//! u32 count | parameter blocks      (trainable tensors)
//! u32 count | parameter blocks      (buffers: permutations, signs, flags)
//! u64 adam t | f64 β1 | f64 β2 | f64 ε | block "adam.m" | block "adam.v"
//! 32-byte ChaCha seed | u64 stream | u128 word position
//! 32-byte SHA-256 of everything above
//! ```
//!
//! A block is `u16 name length | name | u64 count | count × f64`. All
//! integers and floats are little-endian.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{DyadFlowModel, ModelConfig};
use crate::params::Params;

use super::{AdamState, TrainConfig};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DYADFLW\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrainCounters {
    pub epoch: u64,
    pub batch_in_epoch: u64,
    pub epoch_seed: u64,
    pub batches_seen: u64,
}

/// Exact position of a ChaCha8 stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn from_rng(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn to_rng(&self) -> ChaCha8Rng {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

#[derive(Serialize, Deserialize)]
struct EmbeddedConfig {
    model: ModelConfig,
    train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: DyadFlowModel,
    pub adam: AdamState,
    pub train: TrainConfig,
    pub counters: TrainCounters,
    pub rng: RngState,
}

/// Checkpoint holding a model with fresh optimizer state, for evaluation
/// and generation of models that were never trained by [`super::Trainer`].
impl From<DyadFlowModel> for Checkpoint {
    fn from(model: DyadFlowModel) -> Self {
        let adam = AdamState::new(model.num_params());
        Self {
            model,
            adam,
            train: TrainConfig::default(),
            counters: TrainCounters::default(),
            rng: RngState {
                seed: [0; 32],
                stream: 0,
                word_pos: 0,
            },
        }
    }
}

fn put_block(out: &mut Vec<u8>, name: &str, values: &[f64]) {
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint(format!(
                "truncated file: needed {n} bytes at offset {}, {} available",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn block(&mut self) -> Result<(String, Vec<f64>)> {
        let n = self.u16()? as usize;
        let name = std::str::from_utf8(self.take(n)?)
            .map_err(|_| Error::Checkpoint("block name is not UTF-8".into()))?
            .to_string();
        let count = self.u64()? as usize;
        if count > (self.buf.len() - self.pos) / 8 {
            return Err(Error::Checkpoint(format!("block `{name}` claims {count} values past end of file")));
        }
        let values = (0..count).map(|_| self.f64()).collect::<Result<_>>()?;
        Ok((name, values))
    }

    fn expect_block(&mut self, name: &str, len: usize) -> Result<Vec<f64>> {
        let (got, values) = self.block()?;
        if got != name || values.len() != len {
            return Err(Error::Checkpoint(format!(
                "expected block `{name}` of {len} values, found `{got}` of {}",
                values.len()
            )));
        }
        Ok(values)
    }
}

fn fill_blocks(
    r: &mut Reader<'_>,
    layout: Vec<(String, usize)>,
    assign: &mut dyn FnMut(&mut dyn FnMut(&str, &mut [f64])),
) -> Result<()> {
    let count = r.u32()? as usize;
    if count != layout.len() {
        return Err(Error::Checkpoint(format!(
            "expected {} blocks, file has {count}",
            layout.len()
        )));
    }
    let mut blocks = Vec::with_capacity(count);
    for (name, len) in &layout {
        blocks.push(r.expect_block(name, *len)?);
    }
    let mut it = blocks.into_iter();
    assign(&mut |_, dst| dst.copy_from_slice(&it.next().unwrap()));
    Ok(())
}

impl Checkpoint {
    fn config_text(&self) -> Result<String> {
        toml::to_string(&EmbeddedConfig {
            model: self.model.config.clone(),
            train: self.train.clone(),
        })
        .map_err(|e| Error::Checkpoint(format!("cannot serialize config: {e}")))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        let config = self.config_text()?;
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&Sha256::digest(config.as_bytes()));
        out.extend_from_slice(&(config.len() as u32).to_le_bytes());
        out.extend_from_slice(config.as_bytes());
        for c in [
            self.counters.epoch,
            self.counters.batch_in_epoch,
            self.counters.epoch_seed,
            self.counters.batches_seen,
        ] {
            out.extend_from_slice(&c.to_le_bytes());
        }
        let mut params = Vec::new();
        self.model
            .visit("", &mut |n, v| params.push((n.to_string(), v.to_vec())));
        let mut buffers = Vec::new();
        self.model
            .visit_buffers("", &mut |n, v| buffers.push((n.to_string(), v.to_vec())));
        for group in [params, buffers] {
            out.extend_from_slice(&(group.len() as u32).to_le_bytes());
            for (n, v) in &group {
                put_block(&mut out, n, v);
            }
        }
        out.extend_from_slice(&self.adam.t.to_le_bytes());
        for v in [self.adam.beta1, self.adam.beta2, self.adam.eps] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        put_block(&mut out, "adam.m", &self.adam.m);
        put_block(&mut out, "adam.v", &self.adam.v);
        out.extend_from_slice(&self.rng.seed);
        out.extend_from_slice(&self.rng.stream.to_le_bytes());
        out.extend_from_slice(&self.rng.word_pos.to_le_bytes());
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        if buf.len() < CHECKPOINT_MAGIC.len() + 4 + 32 {
            return Err(Error::Checkpoint(format!("truncated file: only {} bytes", buf.len())));
        }
        if &buf[..8] != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file (bad magic bytes)".into()));
        }
        let version = u32::from_le_bytes(buf[8..12].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {version}, this build reads version {CHECKPOINT_VERSION}"
            )));
        }
        let (body, trailer) = buf.split_at(buf.len() - 32);
        if Sha256::digest(body).as_slice() != trailer {
            return Err(Error::Checkpoint(
                "checksum mismatch: file is truncated or corrupted".into(),
            ));
        }
        let mut r = Reader { buf: body, pos: 12 };
        let digest = r.take(32)?.to_vec();
        let n = r.u32()? as usize;
        let config = std::str::from_utf8(r.take(n)?)
            .map_err(|_| Error::Checkpoint("config text is not UTF-8".into()))?;
        if Sha256::digest(config.as_bytes()).as_slice() != digest.as_slice() {
            return Err(Error::Checkpoint("config digest mismatch".into()));
        }
        let cfg: EmbeddedConfig =
            toml::from_str(config).map_err(|e| Error::Checkpoint(format!("bad embedded config: {e}")))?;
        let counters = TrainCounters {
            epoch: r.u64()?,
            batch_in_epoch: r.u64()?,
            epoch_seed: r.u64()?,
            batches_seen: r.u64()?,
        };
        let mut model = DyadFlowModel::new(cfg.model, 0)?;
        let layout = model.names();
        fill_blocks(&mut r, layout, &mut |f| model.visit_mut("", f))?;
        let mut buffer_layout = Vec::new();
        model.visit_buffers("", &mut |n, v| buffer_layout.push((n.to_string(), v.len())));
        fill_blocks(&mut r, buffer_layout, &mut |f| model.visit_buffers_mut("", f))?;
        let n_params = model.num_params();
        let t = r.u64()?;
        let (beta1, beta2, eps) = (r.f64()?, r.f64()?, r.f64()?);
        let m = r.expect_block("adam.m", n_params)?;
        let v = r.expect_block("adam.v", n_params)?;
        let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
        let rng = RngState {
            seed,
            stream: r.u64()?,
            word_pos: r.u128()?,
        };
        if r.pos != body.len() {
            return Err(Error::Checkpoint(format!(
                "{} unexpected trailing bytes",
                body.len() - r.pos
            )));
        }
        Ok(Self {
            model,
            adam: AdamState {
                m,
                v,
                t,
                beta1,
                beta2,
                eps,
            },
            train: cfg.train,
            counters,
            rng,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
