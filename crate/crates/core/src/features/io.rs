//! Feature files and session manifests.
//!
//! A feature file is CSV with a header row and one row per frame. Facial
//! files use the columns `exp00..exp49, neck_x, neck_y, neck_z, jaw_x,
//! jaw_y, jaw_z`; acoustic files use `mfcc01..mfcc25, log_energy, pitch,
//! pitch_delta, energy, energy_delta`. Numbers are written with Rust's
//! shortest round-trip formatting, so a write/read cycle is lossless.
//!
//! A manifest is TOML:
//!
//! ```toml
//! fps = 25
//!
//! [synthetic]          # optional planted parameters
//! n_sessions = 30
//! ...
//!
//! [[sessions]]
//! id = "synth000"
//! a_face = "synth000_a_face.csv"
//! a_acoustic = "synth000_a_acoustic.csv"
//! b_face = "synth000_b_face.csv"
//! b_acoustic = "synth000_b_acoustic.csv"
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::track::Track;
use crate::{ACOUSTIC_DIM, FACE_DIM, FPS};

use super::dataset::{Party, SessionData};
use super::synth::SynthConfig;

pub fn face_header() -> Vec<String> {
    let mut h: Vec<String> = (0..50).map(|i| format!("exp{i:02}")).collect();
    for part in ["neck", "jaw"] {
        for axis in ["x", "y", "z"] {
            h.push(format!("{part}_{axis}"));
        }
    }
    h
}

pub fn acoustic_header() -> Vec<String> {
    let mut h: Vec<String> = (1..=25).map(|i| format!("mfcc{i:02}")).collect();
    h.extend(["log_energy", "pitch", "pitch_delta", "energy", "energy_delta"].map(String::from));
    h
}

/// Header for a track of the given width: the named layouts for facial and
/// acoustic tracks, `c00, c01, ...` otherwise.
pub fn header_for(dim: usize) -> Vec<String> {
    match dim {
        FACE_DIM => face_header(),
        ACOUSTIC_DIM => acoustic_header(),
        _ => (0..dim).map(|i| format!("c{i:02}")).collect(),
    }
}

pub fn write_track(path: &Path, track: &Track) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header_for(track.dim()))?;
    for f in track.frames() {
        w.write_record(f.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a feature file whose header must equal `header_for(dim)`.
pub fn read_track(path: &Path, dim: usize) -> Result<Track> {
    let fail = |msg: String| Error::FeatureFile { path: path.to_path_buf(), msg };
    let mut r = csv::Reader::from_path(path)?;
    let expected = header_for(dim);
    let got: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if got != expected {
        return Err(fail(format!("expected {dim} columns starting with `{}`", expected[0])));
    }
    let mut data = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        for (col, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| fail(format!("row {}, column {col}: cannot parse `{field}`", row + 1)))?;
            if !v.is_finite() {
                return Err(fail(format!("row {}, column {col}: non-finite value", row + 1)));
            }
            data.push(v);
        }
    }
    Track::new(dim, data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionEntry {
    pub id: String,
    pub a_face: PathBuf,
    pub a_acoustic: PathBuf,
    pub b_face: PathBuf,
    pub b_acoustic: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub fps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SynthConfig>,
    pub sessions: Vec<SessionEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path)?;
        let m: Manifest = toml::from_str(&text)
            .map_err(|e| Error::FeatureFile { path: path.to_path_buf(), msg: e.to_string() })?;
        if m.fps != FPS {
            return Err(Error::FeatureFile {
                path: path.to_path_buf(),
                msg: format!("fps {} unsupported; tracks must be {FPS} fps", m.fps),
            });
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(path, text)?;
        Ok(())
    }
}

/// Writes each session's four tracks plus `manifest.toml` into `dir` and
/// returns the manifest path.
pub fn write_corpus(dir: &Path, sessions: &[SessionData], synthetic: Option<&SynthConfig>) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(sessions.len());
    for s in sessions {
        let name = |suffix: &str| PathBuf::from(format!("{}_{suffix}.csv", s.id));
        let e = SessionEntry {
            id: s.id.clone(),
            a_face: name("a_face"),
            a_acoustic: name("a_acoustic"),
            b_face: name("b_face"),
            b_acoustic: name("b_acoustic"),
        };
        write_track(&dir.join(&e.a_face), &s.party_a.face)?;
        write_track(&dir.join(&e.a_acoustic), &s.party_a.acoustic)?;
        write_track(&dir.join(&e.b_face), &s.party_b.face)?;
        write_track(&dir.join(&e.b_acoustic), &s.party_b.acoustic)?;
        entries.push(e);
    }
    let manifest = Manifest { fps: FPS, synthetic: synthetic.copied(), sessions: entries };
    let path = dir.join("manifest.toml");
    manifest.save(&path)?;
    Ok(path)
}

/// Loads and validates every session listed in a manifest.
pub fn load_corpus(manifest_path: &Path) -> Result<(Manifest, Vec<SessionData>)> {
    let manifest = Manifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut sessions = Vec::with_capacity(manifest.sessions.len());
    for e in &manifest.sessions {
        let s = SessionData {
            id: e.id.clone(),
            party_a: Party {
                face: read_track(&base.join(&e.a_face), FACE_DIM)?,
                acoustic: read_track(&base.join(&e.a_acoustic), ACOUSTIC_DIM)?,
            },
            party_b: Party {
                face: read_track(&base.join(&e.b_face), FACE_DIM)?,
                acoustic: read_track(&base.join(&e.b_acoustic), ACOUSTIC_DIM)?,
            },
        };
        s.validate(FACE_DIM, ACOUSTIC_DIM)?;
        sessions.push(s);
    }
    Ok((manifest, sessions))
}
