use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{leaky_relu, leaky_relu_grad, Dense};
use crate::params::{join, Params};
use crate::real::Real;

use super::{Direction, FlowResult};

/// Bound on coupling log-scales: `ls = limit · tanh(raw)`.
pub const DEFAULT_SCALE_LIMIT: f64 = 2.0;

/// Conditional affine coupling. The first half of the channels together
/// with the conditioning vector drive a two-layer network that emits a
/// bounded log-scale and a translation for the second half.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineCoupling<T = f64> {
    pub d: usize,
    pub cond_dim: usize,
    /// `(d/2 + cond_dim) → hidden`, followed by LeakyReLU.
    pub hidden: Dense<T>,
    /// `hidden → d`: `d/2` raw log-scales then `d/2` translations.
    pub out: Dense<T>,
    pub scale_limit: T,
}

/// Intermediates recorded by a forward pass for the reverse-mode pass.
#[derive(Debug, Clone, Default)]
pub struct CouplingCache<T> {
    net_in: Vec<T>,
    pre: Vec<T>,
    act: Vec<T>,
    tanh_s: Vec<T>,
    scale: Vec<T>,
    x2: Vec<T>,
}

impl<T: Real> AffineCoupling<T> {
    /// Random first layer, zero output layer: the identity map.
    pub fn new<R: Rng + ?Sized>(d: usize, cond_dim: usize, hidden: usize, rng: &mut R) -> Self {
        assert!(d % 2 == 0, "coupling needs an even channel count");
        Self {
            d,
            cond_dim,
            hidden: Dense::random(d / 2 + cond_dim, hidden, 1.0, rng),
            out: Dense::zeros(hidden, d),
            scale_limit: T::c(DEFAULT_SCALE_LIMIT),
        }
    }

    pub fn half(&self) -> usize {
        self.d / 2
    }

    fn check(&self, x: &[T], c: &[T]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::Dimension {
                context: "coupling input",
                expected: self.d,
                got: x.len(),
            });
        }
        if c.len() != self.cond_dim {
            return Err(Error::Dimension {
                context: "coupling conditioning",
                expected: self.cond_dim,
                got: c.len(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, x: &[T], c: &[T], dir: Direction) -> Result<FlowResult<T>> {
        self.check(x, c)?;
        let mut output = Vec::with_capacity(self.d);
        let mut cache = CouplingCache::default();
        let logdet = match dir {
            Direction::Forward => self.forward_cached(x, c, &mut output, &mut cache),
            Direction::Inverse => self.inverse_into(x, c, &mut output, &mut cache),
        };
        Ok(FlowResult { output, logdet })
    }

    /// Evaluates the network on `(x1, c)`; leaves log-scales in
    /// `cache.tanh_s` (pre-multiplied into `ls`) and returns translations.
    fn network(&self, x1: &[T], c: &[T], cache: &mut CouplingCache<T>) -> Vec<T> {
        let h = self.half();
        cache.net_in.clear();
        cache.net_in.extend_from_slice(x1);
        cache.net_in.extend_from_slice(c);
        self.hidden.forward_into(&cache.net_in, &mut cache.pre);
        cache.act.clear();
        cache.act.extend(cache.pre.iter().map(|&v| leaky_relu(v)));
        let raw = self.out.forward(&cache.act);
        cache.tanh_s.clear();
        cache.tanh_s.extend(raw[..h].iter().map(|v| v.tanh()));
        cache.scale.clear();
        cache
            .scale
            .extend(cache.tanh_s.iter().map(|&t| (self.scale_limit * t).exp()));
        raw[h..].to_vec()
    }

    pub fn forward_cached(&self, x: &[T], c: &[T], y: &mut Vec<T>, cache: &mut CouplingCache<T>) -> T {
        let h = self.half();
        let (x1, x2) = x.split_at(h);
        let t = self.network(x1, c, cache);
        cache.x2.clear();
        cache.x2.extend_from_slice(x2);
        y.clear();
        y.extend_from_slice(x1);
        y.extend(x2.iter().zip(&cache.scale).zip(&t).map(|((&v, &s), &t)| v * s + t));
        self.scale_limit * cache.tanh_s.iter().copied().sum::<T>()
    }

    pub fn inverse_into(&self, y: &[T], c: &[T], x: &mut Vec<T>, cache: &mut CouplingCache<T>) -> T {
        let h = self.half();
        let (y1, y2) = y.split_at(h);
        let t = self.network(y1, c, cache);
        x.clear();
        x.extend_from_slice(y1);
        x.extend(y2.iter().zip(&cache.scale).zip(&t).map(|((&v, &s), &t)| (v - t) / s));
        -self.scale_limit * cache.tanh_s.iter().copied().sum::<T>()
    }

    /// Reverse-mode pass for the forward direction. Overwrites `g_x`
    /// (length `d`) and adds into `g_c`.
    pub fn backward(
        &self,
        cache: &CouplingCache<T>,
        g_y: &[T],
        g_logdet: T,
        grad: &mut AffineCoupling<T>,
        g_x: &mut [T],
        g_c: &mut [T],
    ) {
        let h = self.half();
        let mut g_out = vec![T::zero(); self.d];
        for i in 0..h {
            let gy2 = g_y[h + i];
            let s = cache.scale[i];
            g_x[h + i] = gy2 * s;
            let g_ls = gy2 * cache.x2[i] * s + g_logdet;
            let th = cache.tanh_s[i];
            g_out[i] = g_ls * self.scale_limit * (T::one() - th * th);
            g_out[h + i] = gy2;
        }
        let mut g_act = vec![T::zero(); self.out.n_in];
        self.out.backward(&cache.act, &g_out, &mut grad.out, Some(&mut g_act));
        for (g, &p) in g_act.iter_mut().zip(&cache.pre) {
            *g *= leaky_relu_grad(p);
        }
        let mut g_in = vec![T::zero(); self.hidden.n_in];
        self.hidden.backward(&cache.net_in, &g_act, &mut grad.hidden, Some(&mut g_in));
        for i in 0..h {
            g_x[i] = g_y[i] + g_in[i];
        }
        for (gc, &g) in g_c.iter_mut().zip(&g_in[h..]) {
            *gc += g;
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            d: self.d,
            cond_dim: self.cond_dim,
            hidden: self.hidden.zeros_like(),
            out: self.out.zeros_like(),
            scale_limit: self.scale_limit,
        }
    }

    pub fn cast<U: Real>(&self) -> AffineCoupling<U> {
        AffineCoupling {
            d: self.d,
            cond_dim: self.cond_dim,
            hidden: self.hidden.cast(),
            out: self.out.cast(),
            scale_limit: U::c(self.scale_limit.f64()),
        }
    }
}

impl Params for AffineCoupling<f64> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&join(prefix, "hidden.weight"), &self.hidden.weight);
        f(&join(prefix, "hidden.bias"), &self.hidden.bias);
        f(&join(prefix, "out.weight"), &self.out.weight);
        f(&join(prefix, "out.bias"), &self.out.bias);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&join(prefix, "hidden.weight"), &mut self.hidden.weight);
        f(&join(prefix, "hidden.bias"), &mut self.hidden.bias);
        f(&join(prefix, "out.weight"), &mut self.out.weight);
        f(&join(prefix, "out.bias"), &mut self.out.bias);
    }
}
