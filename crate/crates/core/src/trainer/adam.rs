use crate::error::{Error, Result};
use crate::params::Params;

/// Adam moments over a flattened parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    /// Number of updates applied so far.
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        Self {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// One bias-corrected Adam update on flat slices.
    pub fn step_flat(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }

    /// Updates every trainable tensor of `params` from the same-shaped `grads`.
    pub fn step<P: Params>(&mut self, params: &mut P, grads: &P, lr: f64) -> Result<()> {
        let mut bad = None;
        grads.visit("", &mut |name, g| {
            if bad.is_none() && g.iter().any(|v| !v.is_finite()) {
                bad = Some(name.to_string());
            }
        });
        if let Some(group) = bad {
            return Err(Error::NonFiniteGradient { group });
        }
        let g = grads.flatten();
        let mut p = params.flatten();
        if p.len() != self.m.len() {
            return Err(Error::Dimension {
                context: "optimizer state",
                expected: self.m.len(),
                got: p.len(),
            });
        }
        self.step_flat(&mut p, &g, lr);
        params.assign_flat(&p);
        Ok(())
    }
}
