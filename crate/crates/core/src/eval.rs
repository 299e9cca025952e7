//! Mismatched-conditioning log-likelihood evaluation.
//!
//! Every test sequence is scored as is and with one conditioning stream
//! replaced by the same stream from another test sequence (a derangement
//! over the whole test set, so no sequence keeps its own stream). A model
//! that uses a stream assigns lower likelihood when it is mismatched.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{DyadFlowModel, DyadSequence, ModelConfig};
use crate::stats::{mean, paired_t_test, std_dev, PairedTTest};
use crate::trainer::derange;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalCondition {
    AllCorrect,
    MismatchedSa,
    MismatchedSi,
    MismatchedFi,
}

impl EvalCondition {
    pub const ALL: [EvalCondition; 4] = [
        EvalCondition::AllCorrect,
        EvalCondition::MismatchedSa,
        EvalCondition::MismatchedSi,
        EvalCondition::MismatchedFi,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            EvalCondition::AllCorrect => "all_correct",
            EvalCondition::MismatchedSa => "mismatched_S_a",
            EvalCondition::MismatchedSi => "mismatched_S_i",
            EvalCondition::MismatchedFi => "mismatched_F_i",
        }
    }

    /// False where the model never sees the deranged stream.
    pub fn applies_to(self, cfg: &ModelConfig) -> bool {
        match self {
            EvalCondition::MismatchedSi => !cfg.no_speech,
            EvalCondition::MismatchedFi => !cfg.no_face,
            _ => true,
        }
    }

    /// Test set with this condition's stream permuted by `perm`.
    pub fn apply(self, seqs: &[DyadSequence], perm: &[usize]) -> Vec<DyadSequence> {
        seqs.iter()
            .zip(perm)
            .map(|(s, &j)| {
                let mut out = s.clone();
                let donor = &seqs[j];
                match self {
                    EvalCondition::AllCorrect => {}
                    EvalCondition::MismatchedSa => out.avatar_speech = donor.avatar_speech.clone(),
                    EvalCondition::MismatchedSi => out.interlocutor_speech = donor.interlocutor_speech.clone(),
                    EvalCondition::MismatchedFi => out.interlocutor_face = donor.interlocutor_face.clone(),
                }
                out
            })
            .collect()
    }
}

/// Per-sequence log-likelihoods for one (model, condition) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LLCell {
    /// Total log-likelihood of each sequence.
    pub totals: Vec<f64>,
    /// Total divided by frame count.
    pub per_frame: Vec<f64>,
}

impl LLCell {
    pub fn mean_total(&self) -> f64 {
        mean(&self.totals)
    }
    pub fn std_total(&self) -> f64 {
        std_dev(&self.totals)
    }
    pub fn mean_per_frame(&self) -> f64 {
        mean(&self.per_frame)
    }
    pub fn std_per_frame(&self) -> f64 {
        std_dev(&self.per_frame)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LLRow {
    pub model: String,
    /// Indexed like [`EvalCondition::ALL`]; `None` marks an absent cell.
    pub cells: Vec<Option<LLCell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LLTable {
    pub rows: Vec<LLRow>,
    /// Derangement used for each mismatched condition (identity for
    /// `all_correct`), shared by all models.
    pub permutations: Vec<Vec<usize>>,
}

fn cond_index(c: EvalCondition) -> usize {
    EvalCondition::ALL.iter().position(|&x| x == c).expect("listed")
}

impl LLTable {
    pub fn row(&self, model: &str) -> Option<&LLRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    pub fn cell(&self, model: &str, cond: EvalCondition) -> Option<&LLCell> {
        self.row(model)?.cells[cond_index(cond)].as_ref()
    }

    /// Paired test of per-frame LL, `a` against `b`, for one model.
    pub fn paired_gap(&self, model: &str, a: EvalCondition, b: EvalCondition) -> Option<Result<PairedTTest>> {
        let (ca, cb) = (self.cell(model, a)?, self.cell(model, b)?);
        Some(paired_t_test(&ca.per_frame, &cb.per_frame))
    }

    /// Human-readable table of mean ± std; `-` marks absent cells.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (title, total) in [("sequence log-likelihood", true), ("per-frame log-likelihood", false)] {
            let _ = writeln!(out, "{title} (mean ± std)");
            let _ = write!(out, "{:<14}", "model");
            for c in EvalCondition::ALL {
                let _ = write!(out, " {:>24}", c.tag());
            }
            out.push('\n');
            for r in &self.rows {
                let _ = write!(out, "{:<14}", r.model);
                for cell in &r.cells {
                    let s = match cell {
                        None => "-".to_string(),
                        Some(c) if total => format!("{:.1} ± {:.1}", c.mean_total(), c.std_total()),
                        Some(c) => format!("{:.3} ± {:.3}", c.mean_per_frame(), c.std_per_frame()),
                    };
                    let _ = write!(out, " {s:>24}");
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }

    /// One tab-separated record per cell, with a header line. Absent cells
    /// carry `absent` and empty statistics.
    pub fn records(&self) -> String {
        let mut out =
            String::from("model\tcondition\tstatus\tn\tmean_total\tstd_total\tmean_per_frame\tstd_per_frame\n");
        for r in &self.rows {
            for (c, cell) in EvalCondition::ALL.iter().zip(&r.cells) {
                let _ = match cell {
                    None => writeln!(out, "{}\t{}\tabsent\t0\t\t\t\t", r.model, c.tag()),
                    Some(x) => writeln!(
                        out,
                        "{}\t{}\tok\t{}\t{}\t{}\t{}\t{}",
                        r.model,
                        c.tag(),
                        x.totals.len(),
                        x.mean_total(),
                        x.std_total(),
                        x.mean_per_frame(),
                        x.std_per_frame()
                    ),
                };
            }
        }
        out
    }
}

fn score(model: &DyadFlowModel, seqs: &[DyadSequence]) -> Result<LLCell> {
    let mut totals = Vec::with_capacity(seqs.len());
    let mut per_frame = Vec::with_capacity(seqs.len());
    for s in seqs {
        let total: f64 = model.frame_log_densities(s)?.iter().sum();
        totals.push(total);
        per_frame.push(total / s.len() as f64);
    }
    Ok(LLCell { totals, per_frame })
}

/// Scores every model under every applicable condition. Derangements are
/// drawn once per condition from `seed`, in the order of
/// [`EvalCondition::ALL`], and shared across models.
pub fn mismatch_table(models: &[(&str, &DyadFlowModel)], test: &[DyadSequence], seed: u64) -> Result<LLTable> {
    if test.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "mismatched evaluation needs at least 2 test sequences, got {}",
            test.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut permutations = Vec::new();
    for c in EvalCondition::ALL {
        permutations.push(match c {
            EvalCondition::AllCorrect => (0..test.len()).collect(),
            _ => derange(test.len(), &mut rng)?,
        });
    }
    let variants: Vec<Vec<DyadSequence>> =
        EvalCondition::ALL.iter().zip(&permutations).map(|(c, p)| c.apply(test, p)).collect();
    let mut rows = Vec::with_capacity(models.len());
    for (name, model) in models {
        let mut cells = Vec::with_capacity(4);
        for (c, seqs) in EvalCondition::ALL.iter().zip(&variants) {
            cells.push(if c.applies_to(&model.config) { Some(score(model, seqs)?) } else { None });
        }
        rows.push(LLRow { model: name.to_string(), cells });
    }
    Ok(LLTable { rows, permutations })
}
