//! Acoustic front-end, facial-track smoothing, crosstalk VAD, corpus
//! handling and the synthetic dyadic corpus.

mod audio;
mod dataset;
pub mod io;
mod mfcc;
mod prosody;
mod savgol;
mod synth;
mod vad;

pub use audio::AudioSignal;
pub use dataset::{
    sources_from_sessions, split_dataset, window_role, window_sessions, DatasetSplit, Party, Role, SessionData,
    SplitProportions, Windowing,
};
pub use mfcc::{compute_mfcc_energy, num_frames, MelFilterbank, MfccExtractor, ENERGY_FLOOR};
pub use prosody::{compute_prosody, Prosody};
pub use savgol::{savgol_coefficients, savgol_filter, savgol_smooth, EdgeMode};
pub use synth::{generate_synthetic_corpus, SynthConfig, ENERGY_CHANNEL};
pub use vad::{vad_mask, VadConfig};

use crate::error::{Error, Result};
use crate::track::Track;

/// Concatenates 26D cepstral/energy and 4D prosodic frames (both at 100
/// fps) and averages consecutive groups of four frames onto the 25 fps
/// video grid. A trailing partial group is dropped.
pub fn assemble_acoustic(mfcc_energy: &Track, prosody: &Track) -> Result<Track> {
    if mfcc_energy.len() != prosody.len() {
        return Err(Error::Dimension {
            context: "acoustic frame count",
            expected: mfcc_energy.len(),
            got: prosody.len(),
        });
    }
    let dim = mfcc_energy.dim() + prosody.dim();
    let groups = mfcc_energy.len() / 4;
    let mut out = Track::zeros(dim, groups);
    for g in 0..groups {
        let dst = out.frame_mut(g);
        for t in 4 * g..4 * g + 4 {
            let (a, b) = dst.split_at_mut(mfcc_energy.dim());
            for (d, &v) in a.iter_mut().zip(mfcc_energy.frame(t)) {
                *d += v / 4.0;
            }
            for (d, &v) in b.iter_mut().zip(prosody.frame(t)) {
                *d += v / 4.0;
            }
        }
    }
    Ok(out)
}

/// 30D acoustic features at 25 fps straight from audio.
pub fn acoustic_features(audio: &AudioSignal) -> Result<Track> {
    let mfcc = compute_mfcc_energy(audio)?;
    let prosody = compute_prosody(audio)?;
    assemble_acoustic(&mfcc, &prosody.features)
}
