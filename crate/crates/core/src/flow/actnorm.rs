use crate::error::{Error, Result};
use crate::params::{join, Params};
use crate::real::Real;

use super::{Direction, FlowResult};

/// Per-channel affine layer `y = scale ⊙ x + bias` with data-dependent
/// initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct ActNorm<T = f64> {
    pub scale: Vec<T>,
    pub bias: Vec<T>,
    pub initialized: bool,
}

impl<T: Real> ActNorm<T> {
    /// Identity parameters, not yet initialized from data.
    pub fn new(d: usize) -> Self {
        Self {
            scale: vec![T::one(); d],
            bias: vec![T::zero(); d],
            initialized: false,
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            initialized: true,
            ..Self::new(d)
        }
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    /// Parameters mapping `batch` to per-channel zero mean, unit variance.
    pub fn initialize<V: AsRef<[T]>>(batch: &[V]) -> Result<Self> {
        if batch.len() < 2 {
            return Err(Error::Empty("actnorm initialization needs at least 2 samples"));
        }
        let d = batch[0].as_ref().len();
        let n = batch.len() as f64;
        let mut scale = Vec::with_capacity(d);
        let mut bias = Vec::with_capacity(d);
        for c in 0..d {
            let mean = batch.iter().map(|x| x.as_ref()[c].f64()).sum::<f64>() / n;
            let var = batch
                .iter()
                .map(|x| (x.as_ref()[c].f64() - mean).powi(2))
                .sum::<f64>()
                / n;
            let eps = T::epsilon().f64();
            if !(var > eps * eps * (1.0 + mean * mean)) {
                return Err(Error::DegenerateChannel { channel: c });
            }
            let s = 1.0 / var.sqrt();
            scale.push(T::c(s));
            bias.push(T::c(-mean * s));
        }
        Ok(Self {
            scale,
            bias,
            initialized: true,
        })
    }

    pub fn logdet(&self) -> T {
        self.scale.iter().map(|s| s.abs().ln()).sum()
    }

    pub fn apply(&self, x: &[T], dir: Direction) -> Result<FlowResult<T>> {
        if !self.initialized {
            return Err(Error::Uninitialized);
        }
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                context: "actnorm input",
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut output = Vec::with_capacity(x.len());
        let logdet = match dir {
            Direction::Forward => self.forward_into(x, &mut output),
            Direction::Inverse => self.inverse_into(x, &mut output),
        };
        Ok(FlowResult { output, logdet })
    }

    pub fn forward_into(&self, x: &[T], y: &mut Vec<T>) -> T {
        y.clear();
        y.extend(x.iter().zip(&self.scale).zip(&self.bias).map(|((&x, &s), &b)| s * x + b));
        self.logdet()
    }

    pub fn inverse_into(&self, y: &[T], x: &mut Vec<T>) -> T {
        x.clear();
        x.extend(y.iter().zip(&self.scale).zip(&self.bias).map(|((&y, &s), &b)| (y - b) / s));
        -self.logdet()
    }

    /// Reverse-mode pass for the forward direction; `g_x` is overwritten.
    pub fn backward(&self, x: &[T], g_y: &[T], g_logdet: T, grad: &mut ActNorm<T>, g_x: &mut [T]) {
        for i in 0..x.len() {
            grad.scale[i] += g_y[i] * x[i] + g_logdet / self.scale[i];
            grad.bias[i] += g_y[i];
            g_x[i] = g_y[i] * self.scale[i];
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            scale: vec![T::zero(); self.dim()],
            bias: vec![T::zero(); self.dim()],
            initialized: self.initialized,
        }
    }

    pub fn cast<U: Real>(&self) -> ActNorm<U> {
        ActNorm {
            scale: self.scale.iter().map(|v| U::c(v.f64())).collect(),
            bias: self.bias.iter().map(|v| U::c(v.f64())).collect(),
            initialized: self.initialized,
        }
    }
}

impl Params for ActNorm<f64> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&join(prefix, "scale"), &self.scale);
        f(&join(prefix, "bias"), &self.bias);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&join(prefix, "scale"), &mut self.scale);
        f(&join(prefix, "bias"), &mut self.bias);
    }

    fn visit_buffers(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&join(prefix, "initialized"), &[self.initialized as u8 as f64]);
    }

    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        let mut flag = [self.initialized as u8 as f64];
        f(&join(prefix, "initialized"), &mut flag);
        self.initialized = flag[0] != 0.0;
    }
}
