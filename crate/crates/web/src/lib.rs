//! Browser demo: a two-dimensional conditional Glow flow trained in the
//! page. The scalar condition `c` selects the target shape (a ring at
//! `c = -1`, two blobs at `c = +1`); the page shows the learned density
//! for any `c` in between and draws samples at a chosen temperature.

use dyadflow::flow::{Direction, GlowStack};
use dyadflow::params::Params;
use dyadflow::trainer::AdamState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wasm_bindgen::prelude::*;

const STEPS: usize = 6;
const HIDDEN: usize = 32;
const BATCH: usize = 64;
const LEARNING_RATE: f64 = 5e-3;

/// One draw from the conditional target: the ring for `c < 0`, the blobs
/// otherwise.
fn target_sample<R: Rng>(c: f64, rng: &mut R) -> Vec<f64> {
    let e0: f64 = rng.sample(StandardNormal);
    let e1: f64 = rng.sample(StandardNormal);
    if c < 0.0 {
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let r = 2.0 + 0.15 * e0;
        vec![r * angle.cos(), r * angle.sin()]
    } else {
        let side = if rng.random_bool(0.5) { 1.5 } else { -1.5 };
        vec![side + 0.35 * e0, 0.35 * e1]
    }
}

fn conds(c: f64) -> Vec<Vec<f64>> {
    vec![vec![c]; STEPS]
}

#[wasm_bindgen]
pub struct FlowDemo {
    flow: GlowStack,
    adam: AdamState,
    rng: ChaCha8Rng,
    steps_trained: u32,
    last_nll: f64,
}

#[wasm_bindgen]
impl FlowDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64) -> FlowDemo {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut flow = GlowStack::new(2, 1, HIDDEN, STEPS, &mut rng);
        let (xs, cs): (Vec<_>, Vec<_>) = (0..512)
            .map(|i| {
                let c = if i % 2 == 0 { -1.0 } else { 1.0 };
                (target_sample(c, &mut rng), conds(c))
            })
            .unzip();
        flow.initialize_actnorm(&xs, &cs).expect("non-degenerate initialization batch");
        let adam = AdamState::new(flow.num_params());
        FlowDemo { flow, adam, rng, steps_trained: 0, last_nll: f64::NAN }
    }

    /// Runs `steps` Adam updates on fresh batches with `c = ±1` and returns
    /// the mean NLL of the last batch.
    pub fn train(&mut self, steps: u32) -> f64 {
        for _ in 0..steps {
            let (xs, cs): (Vec<_>, Vec<_>) = (0..BATCH)
                .map(|i| {
                    let c = if i % 2 == 0 { -1.0 } else { 1.0 };
                    (target_sample(c, &mut self.rng), conds(c))
                })
                .unzip();
            let loss = self.flow.loss_and_gradients(&xs, &cs).expect("shapes fixed at construction");
            self.adam.step(&mut self.flow, &loss.grads, LEARNING_RATE).expect("matching parameter layout");
            self.last_nll = loss.nll;
            self.steps_trained += 1;
        }
        self.last_nll
    }

    #[wasm_bindgen(getter)]
    pub fn steps_trained(&self) -> u32 {
        self.steps_trained
    }

    /// Density on an `n x n` grid over `[-extent, extent]^2`, row-major with
    /// `y` decreasing down the rows (image order).
    pub fn density(&self, n: usize, extent: f64, c: f64) -> Vec<f64> {
        let cs = conds(c);
        let step = 2.0 * extent / n as f64;
        let mut out = Vec::with_capacity(n * n);
        for row in 0..n {
            let y = extent - (row as f64 + 0.5) * step;
            for col in 0..n {
                let x = -extent + (col as f64 + 0.5) * step;
                let lp = self.flow.log_density(&[x, y], &cs).unwrap_or(f64::NEG_INFINITY);
                out.push(lp.exp());
            }
        }
        out
    }

    /// `n` samples at temperature `sigma`, interleaved as `x0, y0, x1, ...`.
    pub fn sample(&self, n: usize, sigma: f64, c: f64, seed: u64) -> Vec<f64> {
        let cs = conds(c);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let z = [sigma * rng.sample::<f64, _>(StandardNormal), sigma * rng.sample::<f64, _>(StandardNormal)];
            match self.flow.transform(&z, &cs, Direction::Inverse) {
                Ok(r) => out.extend_from_slice(&r.output),
                Err(_) => out.extend_from_slice(&[f64::NAN, f64::NAN]),
            }
        }
        out
    }
}
