//! Small dense-layer helpers shared by the coupling networks, the GRU
//! encoders and the per-step conditioning projections.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::real::Real;

pub const LEAKY_SLOPE: f64 = 0.01;

/// Fully connected layer `y = W x + b`, `W` stored row-major as `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T = f64> {
    pub n_in: usize,
    pub n_out: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weight: vec![T::zero(); n_in * n_out],
            bias: vec![T::zero(); n_out],
        }
    }

    /// Gaussian weights with standard deviation `gain / sqrt(n_in)`, zero bias.
    pub fn random<R: Rng + ?Sized>(n_in: usize, n_out: usize, gain: f64, rng: &mut R) -> Self {
        let std = if n_in == 0 { 0.0 } else { gain / (n_in as f64).sqrt() };
        let normal = Normal::new(0.0, std).expect("finite std");
        Self {
            n_in,
            n_out,
            weight: (0..n_in * n_out).map(|_| T::c(normal.sample(rng))).collect(),
            bias: vec![T::zero(); n_out],
        }
    }

    pub fn forward_into(&self, x: &[T], y: &mut Vec<T>) {
        debug_assert_eq!(x.len(), self.n_in);
        y.clear();
        if self.n_in == 0 {
            y.extend_from_slice(&self.bias);
            return;
        }
        y.extend(
            self.weight
                .chunks_exact(self.n_in)
                .zip(&self.bias)
                .map(|(row, &b)| dot(row, x) + b),
        );
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        let mut y = Vec::with_capacity(self.n_out);
        self.forward_into(x, &mut y);
        y
    }

    /// Accumulates parameter gradients into `grad` and adds `Wᵀ g_y` into `g_x`.
    pub fn backward(&self, x: &[T], g_y: &[T], grad: &mut Dense<T>, g_x: Option<&mut [T]>) {
        debug_assert_eq!(g_y.len(), self.n_out);
        for (o, &g) in g_y.iter().enumerate() {
            grad.bias[o] += g;
            if g == T::zero() {
                continue;
            }
            let row = &mut grad.weight[o * self.n_in..(o + 1) * self.n_in];
            for (w, &xi) in row.iter_mut().zip(x) {
                *w += g * xi;
            }
        }
        if let Some(g_x) = g_x {
            for (o, &g) in g_y.iter().enumerate() {
                if g == T::zero() {
                    continue;
                }
                let row = &self.weight[o * self.n_in..(o + 1) * self.n_in];
                for (gx, &w) in g_x.iter_mut().zip(row) {
                    *gx += g * w;
                }
            }
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.n_in, self.n_out)
    }

    pub fn cast<U: Real>(&self) -> Dense<U> {
        Dense {
            n_in: self.n_in,
            n_out: self.n_out,
            weight: self.weight.iter().map(|v| U::c(v.f64())).collect(),
            bias: self.bias.iter().map(|v| U::c(v.f64())).collect(),
        }
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

#[inline]
pub fn leaky_relu<T: Real>(v: T) -> T {
    if v >= T::zero() {
        v
    } else {
        v * T::c(LEAKY_SLOPE)
    }
}

#[inline]
pub fn leaky_relu_grad<T: Real>(pre: T) -> T {
    if pre >= T::zero() {
        T::one()
    } else {
        T::c(LEAKY_SLOPE)
    }
}

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}
