use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::nn::Dense;
use crate::params::{join, Params};
use crate::real::Real;

use super::{
    standard_normal_log_density, ActNorm, AffineCoupling, CouplingCache, Direction, FlowResult,
    InvLinear,
};
use super::random_orthogonal;

/// One step of flow: actnorm → invertible linear → affine coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowStep<T = f64> {
    pub actnorm: ActNorm<T>,
    pub linear: InvLinear<T>,
    pub coupling: AffineCoupling<T>,
}

/// `K` composed steps of flow at a single scale. Step `k` reads only
/// conditioning vector `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlowStack<T = f64> {
    pub steps: Vec<FlowStep<T>>,
    d: usize,
    cond_dim: usize,
}

#[derive(Debug, Clone, Default)]
struct StepCache<T> {
    act_in: Vec<T>,
    lin_in: Vec<T>,
    lin_u: Vec<T>,
    cpl_in: Vec<T>,
    cpl: CouplingCache<T>,
}

/// Forward-pass record used by [`GlowStack::backward`].
#[derive(Debug, Clone, Default)]
pub struct StackCache<T> {
    steps: Vec<StepCache<T>>,
    /// Latent output.
    pub z: Vec<T>,
    /// Total log-determinant.
    pub logdet: T,
    /// Per-layer log-determinants in application order (3 per step).
    pub layer_logdets: Vec<T>,
}

/// Mean negative log-likelihood of a batch with its gradients.
#[derive(Debug, Clone)]
pub struct FlowLoss<T> {
    pub nll: T,
    pub grads: GlowStack<T>,
    /// Gradient of the mean NLL with respect to each item's conditioning vectors.
    pub cond_grads: Vec<Vec<Vec<T>>>,
}

impl<T: Real> GlowStack<T> {
    /// Training initialization: uninitialized actnorm, LU-factored random
    /// rotations, coupling networks with zeroed output layers.
    pub fn new<R: Rng + ?Sized>(d: usize, cond_dim: usize, hidden: usize, k: usize, rng: &mut R) -> Self {
        assert!(k >= 1 && d % 2 == 0 && d >= 2);
        let steps = (0..k)
            .map(|_| FlowStep {
                actnorm: ActNorm::new(d),
                linear: InvLinear::rotation(d, rng),
                coupling: AffineCoupling::new(d, cond_dim, hidden, rng),
            })
            .collect();
        Self { steps, d, cond_dim }
    }

    /// Exact identity map with zero log-determinant.
    pub fn identity(d: usize, cond_dim: usize, hidden: usize, k: usize) -> Self {
        assert!(k >= 1 && d % 2 == 0 && d >= 2);
        let steps = (0..k)
            .map(|_| FlowStep {
                actnorm: ActNorm::identity(d),
                linear: InvLinear::identity(d),
                coupling: AffineCoupling {
                    d,
                    cond_dim,
                    hidden: Dense::zeros(d / 2 + cond_dim, hidden),
                    out: Dense::zeros(hidden, d),
                    scale_limit: T::c(super::DEFAULT_SCALE_LIMIT),
                },
            })
            .collect();
        Self { steps, d, cond_dim }
    }

    /// Fully random, non-identity parameters in every layer.
    pub fn random<R: Rng + ?Sized>(d: usize, cond_dim: usize, hidden: usize, k: usize, rng: &mut R) -> Self {
        let mut g = Self::new(d, cond_dim, hidden, k, rng);
        let bias = Uniform::new(-0.5f64, 0.5).unwrap();
        for step in &mut g.steps {
            step.actnorm.scale = (0..d)
                .map(|_| {
                    let s: f64 = (0.5 * bias.sample(rng)).exp();
                    T::c(if rng.random::<bool>() { s } else { -s })
                })
                .collect();
            step.actnorm.bias = (0..d).map(|_| T::c(0.4 * bias.sample(rng))).collect();
            step.actnorm.initialized = true;
            // W = Q1 diag(e^u) Q2 keeps every singular value within e^0.25.
            let q1 = random_orthogonal(d, rng);
            let q2 = random_orthogonal(d, rng);
            let sv: Vec<f64> = (0..d).map(|_| (0.5 * bias.sample(rng)).exp()).collect();
            let w: Vec<Vec<f64>> = (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| (0..d).map(|k| q1[i][k] * sv[k] * q2[k][j]).sum())
                        .collect()
                })
                .collect();
            step.linear = InvLinear::from_rows(w);
            step.coupling.hidden.bias = (0..hidden).map(|_| T::c(bias.sample(rng))).collect();
            // Log-scales of a few tenths per step, as in trained flows; larger
            // ones compound over deep stacks into numerically lossy maps.
            step.coupling.out = Dense::random(hidden, d, 0.1, rng);
            step.coupling.out.bias = (0..d).map(|_| T::c(0.1 * bias.sample(rng))).collect();
        }
        g
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cond_dim(&self) -> usize {
        self.cond_dim
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn is_initialized(&self) -> bool {
        self.steps.iter().all(|s| s.actnorm.initialized)
    }

    fn check<C: AsRef<[T]>>(&self, x: &[T], conds: &[C]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::Dimension {
                context: "flow input",
                expected: self.d,
                got: x.len(),
            });
        }
        if conds.len() != self.steps.len() {
            return Err(Error::Dimension {
                context: "conditioning vector count",
                expected: self.steps.len(),
                got: conds.len(),
            });
        }
        for c in conds {
            if c.as_ref().len() != self.cond_dim {
                return Err(Error::Dimension {
                    context: "per-step conditioning",
                    expected: self.cond_dim,
                    got: c.as_ref().len(),
                });
            }
        }
        if !self.is_initialized() {
            return Err(Error::Uninitialized);
        }
        Ok(())
    }

    /// Applies the whole stack in either direction.
    pub fn transform<C: AsRef<[T]>>(&self, x: &[T], conds: &[C], dir: Direction) -> Result<FlowResult<T>> {
        match dir {
            Direction::Forward => {
                let mut cache = StackCache::default();
                self.forward_cached(x, conds, &mut cache)?;
                Ok(FlowResult {
                    output: cache.z,
                    logdet: cache.logdet,
                })
            }
            Direction::Inverse => self.inverse(x, conds),
        }
    }

    pub fn forward_cached<C: AsRef<[T]>>(&self, x: &[T], conds: &[C], cache: &mut StackCache<T>) -> Result<()> {
        self.check(x, conds)?;
        cache.steps.resize_with(self.steps.len(), StepCache::default);
        cache.layer_logdets.clear();
        let mut cur = x.to_vec();
        let mut logdet = T::zero();
        for (k, (step, sc)) in self.steps.iter().zip(cache.steps.iter_mut()).enumerate() {
            sc.act_in.clone_from(&cur);
            let ld_a = step.actnorm.forward_into(&sc.act_in, &mut sc.lin_in);
            let ld_l = step.linear.forward_into(&sc.lin_in, &mut sc.cpl_in, &mut sc.lin_u);
            let ld_c = step
                .coupling
                .forward_cached(&sc.cpl_in, conds[k].as_ref(), &mut cur, &mut sc.cpl);
            for ld in [ld_a, ld_l, ld_c] {
                cache.layer_logdets.push(ld);
                logdet += ld;
            }
            if !logdet.is_finite() || cur.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteStep { step: k });
            }
        }
        cache.z = cur;
        cache.logdet = logdet;
        Ok(())
    }

    fn inverse<C: AsRef<[T]>>(&self, z: &[T], conds: &[C]) -> Result<FlowResult<T>> {
        self.check(z, conds)?;
        let mut cur = z.to_vec();
        let mut next = Vec::with_capacity(self.d);
        let mut u = Vec::with_capacity(self.d);
        let mut cc = CouplingCache::default();
        let mut logdet = T::zero();
        for (k, step) in self.steps.iter().enumerate().rev() {
            logdet += step.coupling.inverse_into(&cur, conds[k].as_ref(), &mut next, &mut cc);
            logdet += step.linear.inverse_into(&next, &mut cur, &mut u);
            logdet += step.actnorm.inverse_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            if !logdet.is_finite() || cur.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteStep { step: k });
            }
        }
        Ok(FlowResult { output: cur, logdet })
    }

    /// `log p(x | conds)` in nats under a standard-normal base.
    pub fn log_density<C: AsRef<[T]>>(&self, x: &[T], conds: &[C]) -> Result<T> {
        let r = self.transform(x, conds, Direction::Forward)?;
        Ok(standard_normal_log_density(&r.output) + r.logdet)
    }

    /// Reverse-mode pass: accumulates parameter gradients into `grads`, adds
    /// conditioning gradients into `g_conds` and returns the input gradient.
    pub fn backward(
        &self,
        cache: &StackCache<T>,
        g_z: &[T],
        g_logdet: T,
        grads: &mut GlowStack<T>,
        g_conds: &mut [Vec<T>],
    ) -> Vec<T> {
        let mut g = g_z.to_vec();
        let mut g_tmp = vec![T::zero(); self.d];
        for k in (0..self.steps.len()).rev() {
            let step = &self.steps[k];
            let sc = &cache.steps[k];
            let gs = &mut grads.steps[k];
            step.coupling
                .backward(&sc.cpl, &g, g_logdet, &mut gs.coupling, &mut g_tmp, &mut g_conds[k]);
            step.linear
                .backward(&sc.lin_in, &sc.lin_u, &g_tmp, g_logdet, &mut gs.linear, &mut g);
            step.actnorm.backward(&sc.act_in, &g, g_logdet, &mut gs.actnorm, &mut g_tmp);
            std::mem::swap(&mut g, &mut g_tmp);
        }
        g
    }

    /// Mean NLL over `batch` (each item with its own `K` conditioning
    /// vectors) and exact gradients of that mean.
    pub fn loss_and_gradients(&self, batch: &[Vec<T>], conds: &[Vec<Vec<T>>]) -> Result<FlowLoss<T>> {
        if batch.is_empty() {
            return Err(Error::Empty("loss batch"));
        }
        if conds.len() != batch.len() {
            return Err(Error::Dimension {
                context: "conditioning batch",
                expected: batch.len(),
                got: conds.len(),
            });
        }
        let n = T::c(batch.len() as f64);
        let mut grads = self.zeros_like();
        let mut cond_grads = Vec::with_capacity(batch.len());
        let mut nll = T::zero();
        let mut cache = StackCache::default();
        for (x, c) in batch.iter().zip(conds) {
            self.forward_cached(x, c, &mut cache)?;
            nll -= standard_normal_log_density(&cache.z) + cache.logdet;
            let g_z: Vec<T> = cache.z.iter().map(|&v| v / n).collect();
            let mut g_c = vec![vec![T::zero(); self.cond_dim]; self.steps.len()];
            self.backward(&cache, &g_z, -T::one() / n, &mut grads, &mut g_c);
            cond_grads.push(g_c);
        }
        Ok(FlowLoss {
            nll: nll / n,
            grads,
            cond_grads,
        })
    }

    /// Data-dependent actnorm initialization: each layer is fitted to the
    /// activations reaching it, in order.
    pub fn initialize_actnorm(&mut self, batch: &[Vec<T>], conds: &[Vec<Vec<T>>]) -> Result<()> {
        let mut cur: Vec<Vec<T>> = batch.to_vec();
        let mut tmp = Vec::new();
        let mut u = Vec::new();
        let mut cc = CouplingCache::default();
        for k in 0..self.steps.len() {
            if !self.steps[k].actnorm.initialized {
                self.steps[k].actnorm = ActNorm::initialize(&cur)?;
            }
            let step = &self.steps[k];
            for (x, c) in cur.iter_mut().zip(conds) {
                step.actnorm.forward_into(x, &mut tmp);
                step.linear.forward_into(&tmp, x, &mut u);
                tmp.clone_from(x);
                step.coupling.forward_cached(&tmp, &c[k], x, &mut cc);
            }
        }
        Ok(())
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            steps: self
                .steps
                .iter()
                .map(|s| FlowStep {
                    actnorm: s.actnorm.zeros_like(),
                    linear: s.linear.zeros_like(),
                    coupling: s.coupling.zeros_like(),
                })
                .collect(),
            d: self.d,
            cond_dim: self.cond_dim,
        }
    }

    pub fn cast<U: Real>(&self) -> GlowStack<U> {
        GlowStack {
            steps: self
                .steps
                .iter()
                .map(|s| FlowStep {
                    actnorm: s.actnorm.cast(),
                    linear: s.linear.cast(),
                    coupling: s.coupling.cast(),
                })
                .collect(),
            d: self.d,
            cond_dim: self.cond_dim,
        }
    }
}

impl Params for GlowStack<f64> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        for (k, s) in self.steps.iter().enumerate() {
            let p = join(prefix, &format!("step{k:02}"));
            s.actnorm.visit(&join(&p, "actnorm"), f);
            s.linear.visit(&join(&p, "linear"), f);
            s.coupling.visit(&join(&p, "coupling"), f);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        for (k, s) in self.steps.iter_mut().enumerate() {
            let p = join(prefix, &format!("step{k:02}"));
            s.actnorm.visit_mut(&join(&p, "actnorm"), f);
            s.linear.visit_mut(&join(&p, "linear"), f);
            s.coupling.visit_mut(&join(&p, "coupling"), f);
        }
    }

    fn visit_buffers(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        for (k, s) in self.steps.iter().enumerate() {
            let p = join(prefix, &format!("step{k:02}"));
            s.actnorm.visit_buffers(&join(&p, "actnorm"), f);
            s.linear.visit_buffers(&join(&p, "linear"), f);
        }
    }

    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        for (k, s) in self.steps.iter_mut().enumerate() {
            let p = join(prefix, &format!("step{k:02}"));
            s.actnorm.visit_buffers_mut(&join(&p, "actnorm"), f);
            s.linear.visit_buffers_mut(&join(&p, "linear"), f);
        }
    }
}
