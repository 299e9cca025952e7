//! Finite-difference verification of the analytic NLL gradient.
//!
//! A small model is built, all of its parameters (including zero-initialized
//! coupling output layers) are perturbed to a generic point, and every
//! parameter's analytic derivative of the mean per-frame NLL is compared
//! with a fourth-order central difference.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::model::{DyadFlowModel, DyadSequence, ModelConfig};
use crate::params::Params;
use crate::track::Track;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckOptions {
    pub model: ModelConfig,
    pub seq_len: usize,
    /// Step `h` of the fourth-order central difference
    /// `(−f(θ+2h) + 8f(θ+h) − 8f(θ−h) + f(θ−2h)) / 12h`.
    pub step: f64,
    /// Denominator floor of the relative error. Each NLL evaluation carries
    /// roughly 1e-15 to 1e-14 absolute rounding error, so the difference
    /// quotient resolves derivatives only to about 1e-9; below the floor the
    /// comparison becomes an absolute one.
    pub floor: f64,
    /// Standard deviation of the perturbation applied to every parameter.
    pub perturbation: f64,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            model: ModelConfig {
                face_dim: 6,
                acoustic_dim: 4,
                flow_steps: 2,
                hidden_channels: 16,
                cond_dim: 8,
                avatar_speech_frames: 3,
                interlocutor_speech_frames: 3,
                interlocutor_face_frames: 3,
                face_history_frames: 2,
                gru_layers: 2,
                gru_hidden: 8,
                ..ModelConfig::default()
            },
            seq_len: 6,
            step: 1e-5,
            floor: 1e-5,
            perturbation: 0.1,
            seed: 0,
        }
    }
}

/// Worst discrepancy within one named parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupResult {
    pub name: String,
    pub count: usize,
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    /// Largest |analytic derivative| in the group.
    pub max_grad: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub groups: Vec<GroupResult>,
    pub num_params: usize,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.groups.iter().map(|g| g.max_rel_err).fold(0.0, f64::max)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.max_rel_err() < tol
    }

    pub fn render(&self) -> String {
        let mut s = format!("{:<44} {:>6} {:>12} {:>12} {:>12}\n", "parameter", "count", "max_rel", "max_abs", "max_grad");
        for g in &self.groups {
            s += &format!(
                "{:<44} {:>6} {:>12.3e} {:>12.3e} {:>12.3e}\n",
                g.name, g.count, g.max_rel_err, g.max_abs_err, g.max_grad
            );
        }
        s += &format!("{} parameters, worst relative error {:.3e}\n", self.num_params, self.max_rel_err());
        s
    }
}

fn random_track(dim: usize, len: usize, rng: &mut ChaCha8Rng) -> Track {
    Track::new(dim, (0..dim * len).map(|_| StandardNormal.sample(rng)).collect()).expect("dim > 0")
}

/// Model and sequence used by the check.
pub fn fixture(opts: &GradCheckOptions) -> Result<(DyadFlowModel, DyadSequence)> {
    let c = &opts.model;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let seq = DyadSequence {
        avatar_face: random_track(c.face_dim, opts.seq_len, &mut rng),
        avatar_speech: random_track(c.acoustic_dim, opts.seq_len, &mut rng),
        interlocutor_speech: random_track(c.acoustic_dim, opts.seq_len, &mut rng),
        interlocutor_face: random_track(c.face_dim, opts.seq_len, &mut rng),
    };
    let mut model = DyadFlowModel::new(c.clone(), opts.seed)?;
    model.initialize_actnorm(std::slice::from_ref(&seq), usize::MAX)?;
    let mut flat = model.flatten();
    for v in flat.iter_mut() {
        let e: f64 = StandardNormal.sample(&mut rng);
        *v += opts.perturbation * e;
    }
    model.assign_flat(&flat);
    Ok((model, seq))
}

pub fn run_gradcheck(opts: &GradCheckOptions) -> Result<GradCheckReport> {
    let (mut model, seq) = fixture(opts)?;
    let mut grads = model.zeros_like();
    model.sequence_nll_grad(&seq, 1.0, &mut grads)?;
    let analytic = grads.flatten();
    let base = model.flatten();
    let mut work = base.clone();
    let mut groups = Vec::new();
    let mut off = 0;
    for (name, len) in model.names() {
        let mut g = GroupResult { name, count: len, max_rel_err: 0.0, max_abs_err: 0.0, max_grad: 0.0 };
        for i in off..off + len {
            let mut at = |delta: f64| -> Result<f64> {
                work[i] = base[i] + delta;
                model.assign_flat(&work);
                model.sequence_nll(&seq)
            };
            let h = opts.step;
            let numeric = (-at(2.0 * h)? + 8.0 * at(h)? - 8.0 * at(-h)? + at(-2.0 * h)?) / (12.0 * h);
            work[i] = base[i];
            let abs = (numeric - analytic[i]).abs();
            let rel = abs / analytic[i].abs().max(numeric.abs()).max(opts.floor);
            g.max_abs_err = g.max_abs_err.max(abs);
            g.max_rel_err = g.max_rel_err.max(rel);
            g.max_grad = g.max_grad.max(analytic[i].abs());
        }
        off += len;
        groups.push(g);
    }
    model.assign_flat(&base);
    Ok(GradCheckReport { groups, num_params: base.len() })
}
