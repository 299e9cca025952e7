//! Invertible per-frame transform between facial-feature space and a
//! standard-normal latent space.
//!
//! One step of flow is actnorm → invertible linear → affine coupling; the
//! stack composes `K` steps at a single scale. Every layer reports its exact
//! log-determinant and provides a hand-written reverse-mode pass.

mod actnorm;
mod coupling;
mod invlinear;
mod stack;

pub use actnorm::ActNorm;
pub use coupling::{AffineCoupling, CouplingCache, DEFAULT_SCALE_LIMIT};
pub use invlinear::{random_orthogonal, InvLinear};
pub use stack::{FlowStep, GlowStack, StackCache};

use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Output of a layer together with `log |det J|` in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult<T> {
    pub output: Vec<T>,
    pub logdet: T,
}

/// `log N(z; 0, I)`.
pub fn standard_normal_log_density<T: Real>(z: &[T]) -> T {
    let sq: T = z.iter().map(|&v| v * v).sum();
    let half = T::c(0.5);
    -half * sq - half * T::c(z.len() as f64) * (T::c(2.0) * T::PI()).ln()
}
