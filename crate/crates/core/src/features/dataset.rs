use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::DyadSequence;
use crate::track::Track;

/// One participant's aligned facial and acoustic tracks.
#[derive(Debug, Clone, PartialEq)]
pub struct Party {
    pub face: Track,
    pub acoustic: Track,
}

/// A dyadic session, or a contiguous segment of one.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionData {
    pub id: String,
    pub party_a: Party,
    pub party_b: Party,
}

/// Which party plays the avatar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    AAvatar,
    BAvatar,
}

impl Role {
    pub const BOTH: [Role; 2] = [Role::AAvatar, Role::BAvatar];
}

impl SessionData {
    pub fn len(&self) -> usize {
        self.party_a.face.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self, face_dim: usize, acoustic_dim: usize) -> Result<()> {
        let n = self.len();
        for p in [&self.party_a, &self.party_b] {
            if p.face.dim() != face_dim {
                return Err(Error::Dimension { context: "facial frame", expected: face_dim, got: p.face.dim() });
            }
            if p.acoustic.dim() != acoustic_dim {
                return Err(Error::Dimension {
                    context: "acoustic frame",
                    expected: acoustic_dim,
                    got: p.acoustic.dim(),
                });
            }
            for t in [&p.face, &p.acoustic] {
                if t.len() != n {
                    return Err(Error::Dimension { context: "session track length", expected: n, got: t.len() });
                }
                if !t.is_finite() {
                    return Err(Error::NonFiniteInput { context: "session track" });
                }
            }
        }
        Ok(())
    }

    pub fn segment(&self, start: usize, len: usize, id: String) -> SessionData {
        let cut = |p: &Party| Party { face: p.face.slice(start, len), acoustic: p.acoustic.slice(start, len) };
        SessionData { id, party_a: cut(&self.party_a), party_b: cut(&self.party_b) }
    }

    /// The whole session as a model sequence with the given party as avatar.
    pub fn sequence(&self, role: Role) -> DyadSequence {
        let (av, il) = match role {
            Role::AAvatar => (&self.party_a, &self.party_b),
            Role::BAvatar => (&self.party_b, &self.party_a),
        };
        DyadSequence {
            avatar_face: av.face.clone(),
            avatar_speech: av.acoustic.clone(),
            interlocutor_speech: il.acoustic.clone(),
            interlocutor_face: il.face.clone(),
        }
    }
}

/// Segment proportions for train and validation; test takes the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitProportions {
    pub train: f64,
    pub val: f64,
}

impl Default for SplitProportions {
    fn default() -> Self {
        Self { train: 0.83, val: 0.10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<SessionData>,
    pub val: Vec<SessionData>,
    pub test: Vec<SessionData>,
    pub holdout: SessionData,
}

/// Holds out one random full session, cuts the others into
/// non-overlapping segments of `segment_frames` (a trailing remainder is
/// dropped), shuffles them and assigns them by rounded proportions.
pub fn split_dataset<R: Rng + ?Sized>(
    sessions: &[SessionData],
    segment_frames: usize,
    proportions: SplitProportions,
    rng: &mut R,
) -> Result<DatasetSplit> {
    if sessions.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 sessions to hold one out, got {}",
            sessions.len()
        )));
    }
    if segment_frames == 0 {
        return Err(Error::Config("segment length must be positive".into()));
    }
    let held = rng.random_range(0..sessions.len());
    let mut segments = Vec::new();
    for (i, s) in sessions.iter().enumerate() {
        if i == held {
            continue;
        }
        for k in 0..s.len() / segment_frames {
            segments.push(s.segment(k * segment_frames, segment_frames, format!("{}/{k:03}", s.id)));
        }
    }
    if segments.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no session outside the holdout reaches one {segment_frames}-frame segment"
        )));
    }
    segments.shuffle(rng);
    let n = segments.len();
    let n_train = ((n as f64 * proportions.train).round() as usize).min(n);
    let n_val = ((n as f64 * proportions.val).round() as usize).min(n - n_train);
    let test = segments.split_off(n_train + n_val);
    let val = segments.split_off(n_train);
    Ok(DatasetSplit { train: segments, val, test, holdout: sessions[held].clone() })
}

/// Fixed-stride window layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Windowing {
    pub length: usize,
    pub stride: usize,
}

impl Default for Windowing {
    fn default() -> Self {
        Self { length: 80, stride: 40 }
    }
}

impl Windowing {
    pub fn count(&self, frames: usize) -> usize {
        if frames < self.length || self.stride == 0 {
            0
        } else {
            (frames - self.length) / self.stride + 1
        }
    }
}

/// Windows with the given party as avatar.
pub fn window_role(segments: &[SessionData], role: Role, w: Windowing) -> Vec<DyadSequence> {
    let mut out = Vec::new();
    for s in segments {
        let n = w.count(s.len());
        if n == 0 {
            log::warn!("segment {} has {} frames, shorter than the {}-frame window", s.id, s.len(), w.length);
        }
        for k in 0..n {
            out.push(s.segment(k * w.stride, w.length, String::new()).sequence(role));
        }
    }
    out
}

/// Windows from every segment with each party taking a turn as avatar.
pub fn window_sessions(segments: &[SessionData], w: Windowing) -> Vec<DyadSequence> {
    Role::BOTH.iter().flat_map(|&r| window_role(segments, r, w)).collect()
}

/// Full segments in both roles, for random-offset window sampling.
pub fn sources_from_sessions(segments: &[SessionData]) -> Vec<DyadSequence> {
    segments.iter().flat_map(|s| Role::BOTH.map(|r| s.sequence(r))).collect()
}
