//! Maximum-likelihood training with teacher forcing and negative batches.
//!
//! All randomness comes from one seeded ChaCha generator, consumed in this
//! order: at the start of every epoch one `u64` seeds the epoch's window
//! plan; then for every batch one uniform draw decides whether the batch is
//! negative, followed (for negative batches) by the derangement shuffles.

mod adam;
mod checkpoint;
mod derange;

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::AdamState;
pub use checkpoint::{Checkpoint, RngState, TrainCounters, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use derange::{derange, make_negative_batch};

use crate::error::{Error, Result};
use crate::model::{DyadFlowModel, DyadSequence};
use crate::params::Params;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub initial_lr: f64,
    pub warmup_steps: u64,
    pub batch_size: usize,
    /// Frames per training window.
    pub sequence_length: usize,
    pub epochs: u64,
    /// Probability that a batch is turned into a mismatched (negative) batch.
    pub negative_prob: f64,
    /// `false` trains the no-neg-train ablation.
    pub negative_training: bool,
    /// Frames used for data-dependent actnorm initialization.
    pub actnorm_init_frames: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            initial_lr: 1e-5,
            warmup_steps: 500,
            batch_size: 16,
            sequence_length: 80,
            epochs: 15,
            negative_prob: 0.1,
            negative_training: true,
            actnorm_init_frames: 2000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, face_history_frames: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.negative_prob) {
            return Err(Error::Config("negative_prob must lie in [0, 1]".into()));
        }
        if self.sequence_length < face_history_frames.max(1) {
            return Err(Error::Config(
                "sequence_length must cover the autoregressive history".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.negative_training && self.negative_prob > 0.0 && self.batch_size < 2 {
            return Err(Error::Config("negative batches need batch_size >= 2".into()));
        }
        if !(self.initial_lr > 0.0) {
            return Err(Error::Config("initial_lr must be positive".into()));
        }
        Ok(())
    }
}

/// Linear warmup to `initial_lr`, constant afterwards.
pub fn warmup_lr(step: u64, cfg: &TrainConfig) -> f64 {
    if cfg.warmup_steps == 0 {
        return cfg.initial_lr;
    }
    cfg.initial_lr * (step as f64 / cfg.warmup_steps as f64).min(1.0)
}

/// Per-batch training record; one line of the metrics log.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub lr: f64,
    /// Loss actually applied (NLL, −NLL, or 0 when skipped).
    pub loss: f64,
    pub nll: f64,
    pub is_negative: bool,
    pub skipped: bool,
}

impl StepRecord {
    pub fn log_line(&self) -> String {
        format!(
            "{} {} {} {} {}",
            self.step, self.lr, self.loss, self.is_negative as u8, self.skipped as u8
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpochMetrics {
    pub batches: usize,
    pub positive_batches: usize,
    pub negative_batches: usize,
    pub skipped: usize,
    pub mean_positive_nll: f64,
    pub mean_negative_nll: f64,
    /// Autoregressive inputs taken from model samples; teacher forcing keeps this at 0.
    pub sample_fed_frames: usize,
    pub records: Vec<StepRecord>,
}

/// Loss rule for one batch: positive batches use their NLL; negative
/// batches are pushed up (loss −NLL) only while their NLL is positive and
/// are skipped otherwise. Returns `None` for a skipped batch.
pub fn batch_loss(nll: f64, is_negative: bool) -> Option<f64> {
    if !is_negative {
        Some(nll)
    } else if nll > 0.0 {
        Some(-nll)
    } else {
        None
    }
}

/// Owns the model and every piece of mutable training state.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub model: DyadFlowModel,
    pub adam: AdamState,
    pub cfg: TrainConfig,
    pub counters: TrainCounters,
    rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(model: DyadFlowModel, cfg: TrainConfig) -> Result<Self> {
        cfg.validate(model.config.face_history_frames)?;
        let adam = AdamState::new(model.num_params());
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Self {
            model,
            adam,
            cfg,
            counters: TrainCounters::default(),
            rng,
        })
    }

    pub fn from_checkpoint(ckpt: Checkpoint) -> Result<Self> {
        ckpt.train.validate(ckpt.model.config.face_history_frames)?;
        Ok(Self {
            rng: ckpt.rng.to_rng(),
            model: ckpt.model,
            adam: ckpt.adam,
            cfg: ckpt.train,
            counters: ckpt.counters,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            model: self.model.clone(),
            adam: self.adam.clone(),
            train: self.cfg.clone(),
            counters: self.counters.clone(),
            rng: RngState::from_rng(&self.rng),
        }
    }

    /// Window plan for an epoch: every source sequence is cut into
    /// consecutive windows from a random phase offset; windows are shuffled
    /// and grouped into full batches.
    pub fn epoch_plan(&self, sources: &[DyadSequence], epoch_seed: u64) -> Vec<Vec<(usize, usize)>> {
        let len = self.cfg.sequence_length;
        let mut rng = ChaCha8Rng::seed_from_u64(epoch_seed);
        let mut windows = Vec::new();
        for (i, s) in sources.iter().enumerate() {
            if s.len() < len {
                continue;
            }
            let slack = (s.len() - len).min(len - 1);
            let mut start = if slack > 0 { rng.random_range(0..=slack) } else { 0 };
            while start + len <= s.len() {
                windows.push((i, start));
                start += len;
            }
        }
        windows.shuffle(&mut rng);
        windows
            .chunks_exact(self.cfg.batch_size)
            .map(|c| c.to_vec())
            .collect()
    }

    fn materialize(&self, sources: &[DyadSequence], items: &[(usize, usize)]) -> Vec<DyadSequence> {
        let len = self.cfg.sequence_length;
        items
            .iter()
            .map(|&(i, start)| {
                let s = &sources[i];
                DyadSequence {
                    avatar_face: s.avatar_face.slice(start, len),
                    avatar_speech: s.avatar_speech.slice(start, len),
                    interlocutor_speech: s.interlocutor_speech.slice(start, len),
                    interlocutor_face: s.interlocutor_face.slice(start, len),
                }
            })
            .collect()
    }

    /// One optimization step on `batch` (teacher-forced).
    pub fn train_batch(&mut self, batch: &[DyadSequence]) -> Result<StepRecord> {
        if batch.is_empty() {
            return Err(Error::Empty("training batch"));
        }
        if !self.model.glow.is_initialized() {
            self.model
                .initialize_actnorm(batch, self.cfg.actnorm_init_frames)?;
        }
        let draw: f64 = self.rng.random();
        let is_negative = self.cfg.negative_training && draw < self.cfg.negative_prob;
        let negative;
        let items = if is_negative {
            negative = make_negative_batch(batch, &mut self.rng)?.0;
            &negative[..]
        } else {
            batch
        };
        let mut grads = self.model.zeros_like();
        let scale = 1.0 / items.len() as f64;
        let mut nll = 0.0;
        for seq in items {
            nll += scale * self.model.sequence_nll_grad(seq, scale, &mut grads)?;
        }
        let step = self.counters.batches_seen;
        self.counters.batches_seen += 1;
        let loss = batch_loss(nll, is_negative);
        let lr = warmup_lr(self.adam.t + 1, &self.cfg);
        match loss {
            Some(loss) => {
                if is_negative {
                    grads.visit_mut("", &mut |_, g| g.iter_mut().for_each(|v| *v = -*v));
                }
                self.adam.step(&mut self.model, &grads, lr)?;
                Ok(StepRecord {
                    step,
                    lr,
                    loss,
                    nll,
                    is_negative,
                    skipped: false,
                })
            }
            None => Ok(StepRecord {
                step,
                lr,
                loss: 0.0,
                nll,
                is_negative,
                skipped: true,
            }),
        }
    }

    /// Runs up to `max_batches` batches of the current epoch (all remaining
    /// when `None`), resuming mid-epoch if a previous call stopped early.
    pub fn train_batches(
        &mut self,
        sources: &[DyadSequence],
        max_batches: Option<usize>,
        log: &mut dyn Write,
    ) -> Result<EpochMetrics> {
        if sources.is_empty() {
            return Err(Error::Empty("training dataset"));
        }
        if self.counters.batch_in_epoch == 0 {
            self.counters.epoch_seed = self.rng.next_u64();
        }
        let plan = self.epoch_plan(sources, self.counters.epoch_seed);
        if plan.is_empty() {
            return Err(Error::InsufficientData(format!(
                "no full batch of {} windows of {} frames",
                self.cfg.batch_size, self.cfg.sequence_length
            )));
        }
        let mut metrics = EpochMetrics::default();
        let mut pos_sum = 0.0;
        let mut neg_sum = 0.0;
        let start = self.counters.batch_in_epoch as usize;
        let end = max_batches.map_or(plan.len(), |m| (start + m).min(plan.len()));
        for b in start..end {
            let batch = self.materialize(sources, &plan[b]);
            let rec = self.train_batch(&batch)?;
            writeln!(log, "{}", rec.log_line())?;
            metrics.batches += 1;
            if rec.is_negative {
                metrics.negative_batches += 1;
                neg_sum += rec.nll;
                metrics.skipped += rec.skipped as usize;
            } else {
                metrics.positive_batches += 1;
                pos_sum += rec.nll;
            }
            metrics.records.push(rec);
            self.counters.batch_in_epoch += 1;
        }
        if end == plan.len() {
            self.counters.epoch += 1;
            self.counters.batch_in_epoch = 0;
        }
        metrics.mean_positive_nll = pos_sum / metrics.positive_batches.max(1) as f64;
        metrics.mean_negative_nll = neg_sum / metrics.negative_batches.max(1) as f64;
        Ok(metrics)
    }

    /// One full pass over the epoch plan.
    pub fn train_epoch(&mut self, sources: &[DyadSequence], log: &mut dyn Write) -> Result<EpochMetrics> {
        self.train_batches(sources, None, log)
    }
}
