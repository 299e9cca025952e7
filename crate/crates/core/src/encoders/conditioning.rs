use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{leaky_relu, leaky_relu_grad, Dense};
use crate::params::{join, Params};

use super::{Gru, GruCache, Modality, ModalityWindow};

/// Which interlocutor streams a model ignores.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ablation {
    #[serde(default)]
    pub no_face: bool,
    #[serde(default)]
    pub no_speech: bool,
}

/// `K` per-step conditioning vectors.
pub type ConditioningSet = Vec<Vec<f64>>;

/// Sizes the encoder is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderShape {
    pub face_dim: usize,
    pub acoustic_dim: usize,
    pub avatar_speech_frames: usize,
    pub interlocutor_speech_frames: usize,
    pub interlocutor_face_frames: usize,
    pub face_history_frames: usize,
    pub gru_layers: usize,
    pub gru_hidden: usize,
    pub steps: usize,
    pub cond_dim: usize,
}

/// GRU encoders for each conditioning stream plus one LeakyReLU projection
/// per flow step. Ablated streams have no encoder at all.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningEncoder {
    pub shape: EncoderShape,
    pub ablation: Ablation,
    pub avatar_speech: Gru,
    pub interlocutor_speech: Option<Gru>,
    pub interlocutor_face: Option<Gru>,
    pub projections: Vec<Dense>,
}

#[derive(Debug, Clone, Default)]
pub struct ConditioningCache {
    avatar_speech: GruCache,
    interlocutor_speech: GruCache,
    interlocutor_face: GruCache,
    concat: Vec<f64>,
    pre: Vec<Vec<f64>>,
}

impl ConditioningEncoder {
    pub fn new<R: Rng + ?Sized>(shape: EncoderShape, ablation: Ablation, rng: &mut R) -> Self {
        let gru = |dim, rng: &mut R| Gru::new(dim, shape.gru_hidden, shape.gru_layers, rng);
        let avatar_speech = gru(shape.acoustic_dim, rng);
        let interlocutor_speech = (!ablation.no_speech).then(|| gru(shape.acoustic_dim, rng));
        let interlocutor_face = (!ablation.no_face).then(|| gru(shape.face_dim, rng));
        let mut enc = Self {
            shape,
            ablation,
            avatar_speech,
            interlocutor_speech,
            interlocutor_face,
            projections: Vec::new(),
        };
        let n_in = enc.concat_len();
        enc.projections = (0..shape.steps)
            .map(|_| Dense::random(n_in, shape.cond_dim, 1.0, rng))
            .collect();
        enc
    }

    /// Length of the concatenated encodings plus raw history.
    pub fn concat_len(&self) -> usize {
        let e = self.avatar_speech.encoding_len();
        e + self.interlocutor_speech.as_ref().map_or(0, |g| g.encoding_len())
            + self.interlocutor_face.as_ref().map_or(0, |g| g.encoding_len())
            + self.shape.face_dim * self.shape.face_history_frames
    }

    fn check_window(&self, w: &ModalityWindow<'_>, expected: Modality, frames: usize, dim: usize) -> Result<()> {
        if w.modality != expected {
            return Err(Error::Ablation(format!("expected a {expected:?} window, got {:?}", w.modality)));
        }
        if w.frames.len() != frames * dim {
            return Err(Error::Dimension {
                context: "modality window",
                expected: frames * dim,
                got: w.frames.len(),
            });
        }
        Ok(())
    }

    /// Encodes all streams and projects them to `K` conditioning vectors.
    ///
    /// Interlocutor windows must be `None` exactly when the corresponding
    /// stream is ablated.
    pub fn build(
        &self,
        avatar_speech: ModalityWindow<'_>,
        interlocutor_speech: Option<ModalityWindow<'_>>,
        interlocutor_face: Option<ModalityWindow<'_>>,
        history: &[f64],
    ) -> Result<ConditioningSet> {
        let mut cache = ConditioningCache::default();
        self.build_cached(avatar_speech, interlocutor_speech, interlocutor_face, history, &mut cache)
    }

    pub fn build_cached(
        &self,
        asw: ModalityWindow<'_>,
        isw: Option<ModalityWindow<'_>>,
        ifw: Option<ModalityWindow<'_>>,
        history: &[f64],
        cache: &mut ConditioningCache,
    ) -> Result<ConditioningSet> {
        let s = &self.shape;
        self.check_window(&asw, Modality::AvatarSpeech, s.avatar_speech_frames, s.acoustic_dim)?;
        cache.concat.clear();
        cache
            .concat
            .extend(self.avatar_speech.encode_cached(asw.frames, &mut cache.avatar_speech)?);
        match (&self.interlocutor_speech, isw) {
            (Some(gru), Some(w)) => {
                self.check_window(&w, Modality::InterlocutorSpeech, s.interlocutor_speech_frames, s.acoustic_dim)?;
                cache
                    .concat
                    .extend(gru.encode_cached(w.frames, &mut cache.interlocutor_speech)?);
            }
            (None, None) => {}
            (Some(_), None) => return Err(Error::Ablation("interlocutor speech window missing".into())),
            (None, Some(_)) => {
                return Err(Error::Ablation("interlocutor speech given to a no-speech model".into()))
            }
        }
        match (&self.interlocutor_face, ifw) {
            (Some(gru), Some(w)) => {
                self.check_window(&w, Modality::InterlocutorFace, s.interlocutor_face_frames, s.face_dim)?;
                cache
                    .concat
                    .extend(gru.encode_cached(w.frames, &mut cache.interlocutor_face)?);
            }
            (None, None) => {}
            (Some(_), None) => return Err(Error::Ablation("interlocutor face window missing".into())),
            (None, Some(_)) => return Err(Error::Ablation("interlocutor face given to a no-face model".into())),
        }
        if history.len() != s.face_dim * s.face_history_frames {
            return Err(Error::Dimension {
                context: "autoregressive history",
                expected: s.face_dim * s.face_history_frames,
                got: history.len(),
            });
        }
        cache.concat.extend_from_slice(history);
        cache.pre.resize_with(self.projections.len(), Vec::new);
        let mut out = Vec::with_capacity(self.projections.len());
        for (proj, pre) in self.projections.iter().zip(cache.pre.iter_mut()) {
            proj.forward_into(&cache.concat, pre);
            out.push(pre.iter().map(|&v| leaky_relu(v)).collect());
        }
        Ok(out)
    }

    /// Accumulates parameter gradients from gradients on the conditioning set.
    pub fn backward(&self, cache: &ConditioningCache, g_conds: &[Vec<f64>], grad: &mut ConditioningEncoder) {
        let mut g_concat = vec![0.0; cache.concat.len()];
        for (k, proj) in self.projections.iter().enumerate() {
            let g_pre: Vec<f64> = g_conds[k]
                .iter()
                .zip(&cache.pre[k])
                .map(|(&g, &p)| g * leaky_relu_grad(p))
                .collect();
            proj.backward(&cache.concat, &g_pre, &mut grad.projections[k], Some(&mut g_concat));
        }
        let mut off = 0;
        let n = self.avatar_speech.encoding_len();
        self.avatar_speech
            .backward(&cache.avatar_speech, &g_concat[off..off + n], &mut grad.avatar_speech);
        off += n;
        if let (Some(gru), Some(g)) = (&self.interlocutor_speech, grad.interlocutor_speech.as_mut()) {
            let n = gru.encoding_len();
            gru.backward(&cache.interlocutor_speech, &g_concat[off..off + n], g);
            off += n;
        }
        if let (Some(gru), Some(g)) = (&self.interlocutor_face, grad.interlocutor_face.as_mut()) {
            let n = gru.encoding_len();
            gru.backward(&cache.interlocutor_face, &g_concat[off..off + n], g);
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            shape: self.shape,
            ablation: self.ablation,
            avatar_speech: self.avatar_speech.zeros_like(),
            interlocutor_speech: self.interlocutor_speech.as_ref().map(Gru::zeros_like),
            interlocutor_face: self.interlocutor_face.as_ref().map(Gru::zeros_like),
            projections: self.projections.iter().map(Dense::zeros_like).collect(),
        }
    }
}

impl Params for ConditioningEncoder {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.avatar_speech.visit(&join(prefix, "avatar_speech"), f);
        if let Some(g) = &self.interlocutor_speech {
            g.visit(&join(prefix, "interlocutor_speech"), f);
        }
        if let Some(g) = &self.interlocutor_face {
            g.visit(&join(prefix, "interlocutor_face"), f);
        }
        for (k, p) in self.projections.iter().enumerate() {
            let name = join(prefix, &format!("proj{k:02}"));
            f(&join(&name, "weight"), &p.weight);
            f(&join(&name, "bias"), &p.bias);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.avatar_speech.visit_mut(&join(prefix, "avatar_speech"), f);
        if let Some(g) = &mut self.interlocutor_speech {
            g.visit_mut(&join(prefix, "interlocutor_speech"), f);
        }
        if let Some(g) = &mut self.interlocutor_face {
            g.visit_mut(&join(prefix, "interlocutor_face"), f);
        }
        for (k, p) in self.projections.iter_mut().enumerate() {
            let name = join(prefix, &format!("proj{k:02}"));
            f(&join(&name, "weight"), &mut p.weight);
            f(&join(&name, "bias"), &mut p.bias);
        }
    }
}
