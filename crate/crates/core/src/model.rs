//! The full autoregressive conditional model.
//!
//! For frame `t` every conditioning window (avatar speech, interlocutor
//! speech and face, and the avatar's own facial history) ends at frame
//! `t − 1` and is zero-padded before the start of the sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::encoders::{
    Ablation, ConditioningCache, ConditioningEncoder, ConditioningSet, EncoderShape, Modality,
    ModalityWindow,
};
use crate::error::{Error, Result};
use crate::flow::{standard_normal_log_density, Direction, GlowStack, StackCache};
use crate::params::{join, Params};
use crate::track::Track;
use crate::{ACOUSTIC_DIM, FACE_DIM, FPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub face_dim: usize,
    pub acoustic_dim: usize,
    /// Number of flow steps `K`.
    pub flow_steps: usize,
    /// Hidden width of each coupling network.
    pub hidden_channels: usize,
    /// Per-step conditioning dimensionality.
    pub cond_dim: usize,
    pub avatar_speech_frames: usize,
    pub interlocutor_speech_frames: usize,
    pub interlocutor_face_frames: usize,
    /// Autoregressive history length in frames.
    pub face_history_frames: usize,
    pub gru_layers: usize,
    pub gru_hidden: usize,
    pub no_face: bool,
    pub no_speech: bool,
    pub fps: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            face_dim: FACE_DIM,
            acoustic_dim: ACOUSTIC_DIM,
            flow_steps: 16,
            hidden_channels: 128,
            cond_dim: 512,
            avatar_speech_frames: 25,
            interlocutor_speech_frames: 25,
            interlocutor_face_frames: 25,
            face_history_frames: 24,
            gru_layers: 2,
            gru_hidden: 64,
            no_face: false,
            no_speech: false,
            fps: FPS,
        }
    }
}

impl ModelConfig {
    pub fn ablation(&self) -> Ablation {
        Ablation {
            no_face: self.no_face,
            no_speech: self.no_speech,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.face_dim < 2 || self.face_dim % 2 != 0 {
            return fail("face_dim must be even and at least 2");
        }
        if self.flow_steps == 0 {
            return fail("flow_steps must be at least 1");
        }
        if self.acoustic_dim == 0 || self.hidden_channels == 0 || self.cond_dim == 0 {
            return fail("acoustic_dim, hidden_channels and cond_dim must be positive");
        }
        if self.avatar_speech_frames == 0
            || self.interlocutor_speech_frames == 0
            || self.interlocutor_face_frames == 0
        {
            return fail("modality window lengths must be positive");
        }
        if self.gru_layers == 0 || self.gru_hidden == 0 {
            return fail("GRU depth and width must be positive");
        }
        if self.fps != FPS {
            return fail("all tracks are aligned at 25 fps");
        }
        Ok(())
    }

    fn encoder_shape(&self) -> EncoderShape {
        EncoderShape {
            face_dim: self.face_dim,
            acoustic_dim: self.acoustic_dim,
            avatar_speech_frames: self.avatar_speech_frames,
            interlocutor_speech_frames: self.interlocutor_speech_frames,
            interlocutor_face_frames: self.interlocutor_face_frames,
            face_history_frames: self.face_history_frames,
            gru_layers: self.gru_layers,
            gru_hidden: self.gru_hidden,
            steps: self.flow_steps,
            cond_dim: self.cond_dim,
        }
    }
}

/// Time-aligned tracks for one avatar/interlocutor pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadSequence {
    pub avatar_face: Track,
    pub avatar_speech: Track,
    pub interlocutor_speech: Track,
    pub interlocutor_face: Track,
}

impl DyadSequence {
    pub fn len(&self) -> usize {
        self.avatar_face.len()
    }

    pub fn is_empty(&self) -> bool {
        self.avatar_face.is_empty()
    }

    fn validate(&self, cfg: &ModelConfig) -> Result<()> {
        let t = self.avatar_face.len();
        for (track, dim, name) in [
            (&self.avatar_face, cfg.face_dim, "avatar face"),
            (&self.avatar_speech, cfg.acoustic_dim, "avatar speech"),
            (&self.interlocutor_speech, cfg.acoustic_dim, "interlocutor speech"),
            (&self.interlocutor_face, cfg.face_dim, "interlocutor face"),
        ] {
            if track.dim() != dim {
                return Err(Error::Dimension {
                    context: "sequence feature dimension",
                    expected: dim,
                    got: track.dim(),
                });
            }
            if track.len() != t {
                return Err(Error::Dimension {
                    context: "sequence length",
                    expected: t,
                    got: track.len(),
                });
            }
            if !track.is_finite() {
                return Err(Error::NonFiniteInput { context: name });
            }
        }
        if t == 0 {
            return Err(Error::Empty("sequence"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    /// Standard-deviation multiplier on the latent noise.
    pub temperature: f64,
    pub seed: u64,
    /// Ground-truth frames copied to the output before sampling starts.
    pub init_frames: Option<Track>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            seed: 0,
            init_frames: None,
        }
    }
}

/// Reusable per-frame buffers.
#[derive(Default)]
struct Scratch {
    asw: Vec<f64>,
    isw: Vec<f64>,
    ifw: Vec<f64>,
    hist: Vec<f64>,
    cond_cache: ConditioningCache,
    flow_cache: StackCache<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadFlowModel {
    pub config: ModelConfig,
    pub glow: GlowStack,
    pub conditioner: ConditioningEncoder,
}

impl DyadFlowModel {
    /// Fresh model for training; actnorm still needs data-dependent
    /// initialization.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let glow = GlowStack::new(
            config.face_dim,
            config.cond_dim,
            config.hidden_channels,
            config.flow_steps,
            &mut rng,
        );
        let conditioner = ConditioningEncoder::new(config.encoder_shape(), config.ablation(), &mut rng);
        Ok(Self {
            config,
            glow,
            conditioner,
        })
    }

    /// Model whose flow is the exact identity (random encoders).
    pub fn with_identity_flow(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut m = Self::new(config, seed)?;
        m.glow = GlowStack::identity(
            m.config.face_dim,
            m.config.cond_dim,
            m.config.hidden_channels,
            m.config.flow_steps,
        );
        Ok(m)
    }

    fn conditioning(&self, speech_a: &Track, speech_i: &Track, face_i: &Track, history: &Track, t: usize, s: &mut Scratch) -> Result<ConditioningSet> {
        let c = &self.config;
        speech_a.window_into(t, c.avatar_speech_frames, &mut s.asw);
        history.window_into(t, c.face_history_frames, &mut s.hist);
        let isw = if c.no_speech {
            None
        } else {
            speech_i.window_into(t, c.interlocutor_speech_frames, &mut s.isw);
            Some(ModalityWindow {
                modality: Modality::InterlocutorSpeech,
                frames: &s.isw,
            })
        };
        let ifw = if c.no_face {
            None
        } else {
            face_i.window_into(t, c.interlocutor_face_frames, &mut s.ifw);
            Some(ModalityWindow {
                modality: Modality::InterlocutorFace,
                frames: &s.ifw,
            })
        };
        let asw = ModalityWindow {
            modality: Modality::AvatarSpeech,
            frames: &s.asw,
        };
        self.conditioner.build_cached(asw, isw, ifw, &s.hist, &mut s.cond_cache)
    }

    /// Conditioning set for frame `t` of a teacher-forced sequence.
    pub fn conditioning_at(&self, seq: &DyadSequence, t: usize) -> Result<ConditioningSet> {
        let mut s = Scratch::default();
        self.conditioning(
            &seq.avatar_speech,
            &seq.interlocutor_speech,
            &seq.interlocutor_face,
            &seq.avatar_face,
            t,
            &mut s,
        )
    }

    /// Teacher-forced `log p(F_a[t] | past)` for every frame.
    pub fn frame_log_densities(&self, seq: &DyadSequence) -> Result<Vec<f64>> {
        seq.validate(&self.config)?;
        let mut s = Scratch::default();
        (0..seq.len())
            .map(|t| {
                let conds = self.conditioning(
                    &seq.avatar_speech,
                    &seq.interlocutor_speech,
                    &seq.interlocutor_face,
                    &seq.avatar_face,
                    t,
                    &mut s,
                )?;
                self.glow.log_density(seq.avatar_face.frame(t), &conds)
            })
            .collect()
    }

    /// Mean negative log-likelihood per frame in nats.
    pub fn sequence_nll(&self, seq: &DyadSequence) -> Result<f64> {
        let lds = self.frame_log_densities(seq)?;
        Ok(-lds.iter().sum::<f64>() / lds.len() as f64)
    }

    /// Mean per-frame NLL; adds `scale · ∂NLL/∂θ` into `grads`.
    pub fn sequence_nll_grad(&self, seq: &DyadSequence, scale: f64, grads: &mut DyadFlowModel) -> Result<f64> {
        seq.validate(&self.config)?;
        let n = seq.len();
        let w = scale / n as f64;
        let mut s = Scratch::default();
        let mut total = 0.0;
        for t in 0..n {
            let conds = self.conditioning(
                &seq.avatar_speech,
                &seq.interlocutor_speech,
                &seq.interlocutor_face,
                &seq.avatar_face,
                t,
                &mut s,
            )?;
            self.glow.forward_cached(seq.avatar_face.frame(t), &conds, &mut s.flow_cache)?;
            total -= standard_normal_log_density(&s.flow_cache.z) + s.flow_cache.logdet;
            let g_z: Vec<f64> = s.flow_cache.z.iter().map(|&v| v * w).collect();
            let mut g_conds = vec![vec![0.0; self.config.cond_dim]; self.config.flow_steps];
            self.glow
                .backward(&s.flow_cache, &g_z, -w, &mut grads.glow, &mut g_conds);
            self.conditioner
                .backward(&s.cond_cache, &g_conds, &mut grads.conditioner);
        }
        Ok(total / n as f64)
    }

    /// Autoregressive sampling: `F̂[t] = g(z_t; conds_t)`, `z_t ~ N(0, σ²I)`,
    /// with the facial history taken from previously generated frames.
    pub fn generate(
        &self,
        avatar_speech: &Track,
        interlocutor_speech: &Track,
        interlocutor_face: &Track,
        gcfg: &GenerationConfig,
    ) -> Result<Track> {
        if !(gcfg.temperature >= 0.0) || !gcfg.temperature.is_finite() {
            return Err(Error::Config(format!(
                "temperature must be a finite value >= 0, got {}",
                gcfg.temperature
            )));
        }
        let c = &self.config;
        let n = avatar_speech.len();
        if interlocutor_speech.len() != n || interlocutor_face.len() != n {
            return Err(Error::Dimension {
                context: "conditioning track length",
                expected: n,
                got: interlocutor_speech.len().min(interlocutor_face.len()),
            });
        }
        if avatar_speech.dim() != c.acoustic_dim
            || interlocutor_speech.dim() != c.acoustic_dim
            || interlocutor_face.dim() != c.face_dim
        {
            return Err(Error::Dimension {
                context: "conditioning track dimension",
                expected: c.acoustic_dim,
                got: avatar_speech.dim(),
            });
        }
        for t in [avatar_speech, interlocutor_speech, interlocutor_face] {
            if !t.is_finite() {
                return Err(Error::NonFiniteInput { context: "generation input" });
            }
        }
        let mut out = Track::zeros(c.face_dim, 0);
        let n_init = match &gcfg.init_frames {
            Some(init) => {
                if init.dim() != c.face_dim {
                    return Err(Error::Dimension {
                        context: "initialization frames",
                        expected: c.face_dim,
                        got: init.dim(),
                    });
                }
                let k = init.len().min(n);
                for t in 0..k {
                    out.push(init.frame(t));
                }
                k
            }
            None => 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(gcfg.seed);
        let mut s = Scratch::default();
        let mut z = vec![0.0; c.face_dim];
        for t in n_init..n {
            for v in z.iter_mut() {
                let e: f64 = StandardNormal.sample(&mut rng);
                *v = gcfg.temperature * e;
            }
            let conds = self.conditioning(avatar_speech, interlocutor_speech, interlocutor_face, &out, t, &mut s)?;
            let frame = self.glow.transform(&z, &conds, Direction::Inverse)?;
            out.push(&frame.output);
        }
        Ok(out)
    }

    /// Data-dependent actnorm initialization from teacher-forced frames of
    /// the given sequences (at most `max_frames` frames are used).
    pub fn initialize_actnorm(&mut self, seqs: &[DyadSequence], max_frames: usize) -> Result<()> {
        let mut xs = Vec::new();
        let mut cs = Vec::new();
        'outer: for seq in seqs {
            seq.validate(&self.config)?;
            for t in 0..seq.len() {
                if xs.len() >= max_frames {
                    break 'outer;
                }
                xs.push(seq.avatar_face.frame(t).to_vec());
                cs.push(self.conditioning_at(seq, t)?);
            }
        }
        self.glow.initialize_actnorm(&xs, &cs)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config.clone(),
            glow: self.glow.zeros_like(),
            conditioner: self.conditioner.zeros_like(),
        }
    }
}

impl Params for DyadFlowModel {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.glow.visit(&join(prefix, "flow"), f);
        self.conditioner.visit(&join(prefix, "cond"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.glow.visit_mut(&join(prefix, "flow"), f);
        self.conditioner.visit_mut(&join(prefix, "cond"), f);
    }

    fn visit_buffers(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.glow.visit_buffers(&join(prefix, "flow"), f);
    }

    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.glow.visit_buffers_mut(&join(prefix, "flow"), f);
    }
}
