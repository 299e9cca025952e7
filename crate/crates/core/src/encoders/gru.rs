use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{sigmoid, Dense};
use crate::params::{join, Params};

/// One GRU layer. Gate rows are ordered reset, update, candidate:
///
/// ```text
/// r  = σ(W_ir x + b_ir + W_hr h + b_hr)
/// z  = σ(W_iz x + b_iz + W_hz h + b_hz)
/// n  = tanh(W_in x + b_in + r ⊙ (W_hn h + b_hn))
/// h' = (1 − z) ⊙ n + z ⊙ h
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GruLayer {
    pub input: Dense,
    pub recurrent: Dense,
}

/// Multi-layer GRU run from a zero initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Gru {
    pub input_size: usize,
    pub hidden_size: usize,
    pub layers: Vec<GruLayer>,
}

#[derive(Debug, Clone, Default)]
struct LayerCache {
    inputs: Vec<Vec<f64>>,
    h_prev: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    n: Vec<Vec<f64>>,
    hn: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
pub struct GruCache {
    layers: Vec<LayerCache>,
}

impl Gru {
    pub fn new<R: Rng + ?Sized>(input_size: usize, hidden_size: usize, num_layers: usize, rng: &mut R) -> Self {
        assert!(num_layers >= 1 && hidden_size >= 1);
        let layers = (0..num_layers)
            .map(|l| {
                let n_in = if l == 0 { input_size } else { hidden_size };
                GruLayer {
                    input: Dense::random(n_in, 3 * hidden_size, 1.0, rng),
                    recurrent: Dense::random(hidden_size, 3 * hidden_size, 1.0, rng),
                }
            })
            .collect();
        Self {
            input_size,
            hidden_size,
            layers,
        }
    }

    pub fn zeros(input_size: usize, hidden_size: usize, num_layers: usize) -> Self {
        let layers = (0..num_layers)
            .map(|l| {
                let n_in = if l == 0 { input_size } else { hidden_size };
                GruLayer {
                    input: Dense::zeros(n_in, 3 * hidden_size),
                    recurrent: Dense::zeros(hidden_size, 3 * hidden_size),
                }
            })
            .collect();
        Self {
            input_size,
            hidden_size,
            layers,
        }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Length of the vector returned by [`Gru::encode`].
    pub fn encoding_len(&self) -> usize {
        self.hidden_size * (self.layers.len() + 1)
    }

    /// Runs the recurrence over `frames` (flattened, `input_size` per frame)
    /// and returns `[top-layer output at the last step ‖ final hidden state
    /// of every layer]`.
    pub fn encode(&self, frames: &[f64]) -> Result<Vec<f64>> {
        let mut cache = GruCache::default();
        self.encode_cached(frames, &mut cache)
    }

    pub fn encode_cached(&self, frames: &[f64], cache: &mut GruCache) -> Result<Vec<f64>> {
        if frames.is_empty() {
            return Err(Error::Empty("GRU window"));
        }
        if frames.len() % self.input_size != 0 {
            return Err(Error::Dimension {
                context: "GRU input frame",
                expected: self.input_size,
                got: frames.len() % self.input_size,
            });
        }
        let hs = self.hidden_size;
        let steps = frames.len() / self.input_size;
        cache.layers.resize_with(self.layers.len(), LayerCache::default);
        let mut seq: Vec<Vec<f64>> = frames.chunks_exact(self.input_size).map(|f| f.to_vec()).collect();
        let mut finals = Vec::with_capacity(self.layers.len());
        let mut gi = Vec::with_capacity(3 * hs);
        let mut gh = Vec::with_capacity(3 * hs);
        for (layer, lc) in self.layers.iter().zip(cache.layers.iter_mut()) {
            lc.h_prev.clear();
            lc.r.clear();
            lc.z.clear();
            lc.n.clear();
            lc.hn.clear();
            let mut h = vec![0.0; hs];
            let mut outputs = Vec::with_capacity(steps);
            for x in &seq {
                layer.input.forward_into(x, &mut gi);
                layer.recurrent.forward_into(&h, &mut gh);
                let r: Vec<f64> = (0..hs).map(|j| sigmoid(gi[j] + gh[j])).collect();
                let z: Vec<f64> = (0..hs).map(|j| sigmoid(gi[hs + j] + gh[hs + j])).collect();
                let hn = gh[2 * hs..].to_vec();
                let n: Vec<f64> = (0..hs).map(|j| (gi[2 * hs + j] + r[j] * hn[j]).tanh()).collect();
                let h_new: Vec<f64> = (0..hs).map(|j| (1.0 - z[j]) * n[j] + z[j] * h[j]).collect();
                lc.h_prev.push(std::mem::replace(&mut h, h_new));
                lc.r.push(r);
                lc.z.push(z);
                lc.n.push(n);
                lc.hn.push(hn);
                outputs.push(h.clone());
            }
            finals.push(h);
            lc.inputs = std::mem::replace(&mut seq, outputs);
        }
        let mut enc = Vec::with_capacity(self.encoding_len());
        enc.extend_from_slice(finals.last().unwrap());
        for f in &finals {
            enc.extend_from_slice(f);
        }
        Ok(enc)
    }

    /// Backpropagation through time from a gradient on the encoding.
    pub fn backward(&self, cache: &GruCache, g_enc: &[f64], grad: &mut Gru) {
        let hs = self.hidden_size;
        let nl = self.layers.len();
        // Gradient flowing into each layer's per-step outputs.
        let steps = cache.layers[0].h_prev.len();
        let mut g_out = vec![vec![0.0; hs]; steps];
        for l in (0..nl).rev() {
            let layer = &self.layers[l];
            let lc = &cache.layers[l];
            let gl = &mut grad.layers[l];
            let final_g = &g_enc[(l + 1) * hs..(l + 2) * hs];
            for j in 0..hs {
                g_out[steps - 1][j] += final_g[j];
                if l == nl - 1 {
                    g_out[steps - 1][j] += g_enc[j];
                }
            }
            let n_in = layer.input.n_in;
            let mut g_in_seq = vec![vec![0.0; n_in]; steps];
            let mut carry = vec![0.0; hs];
            let mut g_i = vec![0.0; 3 * hs];
            let mut g_h = vec![0.0; 3 * hs];
            for t in (0..steps).rev() {
                let (r, z, n, hn, hp) = (&lc.r[t], &lc.z[t], &lc.n[t], &lc.hn[t], &lc.h_prev[t]);
                let mut g_hprev = vec![0.0; hs];
                for j in 0..hs {
                    let gh = g_out[t][j] + carry[j];
                    let g_n = gh * (1.0 - z[j]);
                    let g_z = gh * (hp[j] - n[j]);
                    g_hprev[j] = gh * z[j];
                    let g_an = g_n * (1.0 - n[j] * n[j]);
                    let g_r = g_an * hn[j];
                    let g_ar = g_r * r[j] * (1.0 - r[j]);
                    let g_az = g_z * z[j] * (1.0 - z[j]);
                    g_i[j] = g_ar;
                    g_i[hs + j] = g_az;
                    g_i[2 * hs + j] = g_an;
                    g_h[j] = g_ar;
                    g_h[hs + j] = g_az;
                    g_h[2 * hs + j] = g_an * r[j];
                }
                let g_x = if l > 0 { Some(&mut g_in_seq[t][..]) } else { None };
                layer.input.backward(&lc.inputs[t], &g_i, &mut gl.input, g_x);
                layer.recurrent.backward(hp, &g_h, &mut gl.recurrent, Some(&mut g_hprev));
                carry = g_hprev;
            }
            if l > 0 {
                g_out = g_in_seq;
            }
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_size, self.hidden_size, self.layers.len())
    }
}

impl Params for Gru {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        for (l, layer) in self.layers.iter().enumerate() {
            let p = join(prefix, &format!("layer{l}"));
            f(&join(&p, "w_ih"), &layer.input.weight);
            f(&join(&p, "b_ih"), &layer.input.bias);
            f(&join(&p, "w_hh"), &layer.recurrent.weight);
            f(&join(&p, "b_hh"), &layer.recurrent.bias);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        for (l, layer) in self.layers.iter_mut().enumerate() {
            let p = join(prefix, &format!("layer{l}"));
            f(&join(&p, "w_ih"), &mut layer.input.weight);
            f(&join(&p, "b_ih"), &mut layer.input.bias);
            f(&join(&p, "w_hh"), &mut layer.recurrent.weight);
            f(&join(&p, "b_hh"), &mut layer.recurrent.bias);
        }
    }
}
