//! Savitzky–Golay smoothing via Gram polynomials.

use crate::track::Track;

pub const SAVGOL_WINDOW: usize = 9;
pub const SAVGOL_ORDER: usize = 3;

/// Boundary handling for the first and last `window / 2` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeMode {
    /// Evaluate the least-squares polynomial of the first (last) full
    /// window at the edge positions. Exact for polynomials up to the order.
    #[default]
    Interp,
    /// Reflect the signal about its end samples (`x[-k] = x[k]`).
    Mirror,
}

/// Gram polynomial `P_k(i)` on the points `-m..=m`.
fn gram_poly(i: f64, m: f64, k: usize) -> f64 {
    let (mut p_prev, mut p) = (0.0, 1.0);
    for j in 1..=k {
        let j = j as f64;
        let next = (4.0 * j - 2.0) / (j * (2.0 * m - j + 1.0)) * i * p
            - ((j - 1.0) * (2.0 * m + j)) / (j * (2.0 * m - j + 1.0)) * p_prev;
        p_prev = p;
        p = next;
    }
    p
}

/// `a · (a−1) ⋯ (a−b+1)`.
fn gen_fact(a: f64, b: usize) -> f64 {
    (0..b).map(|j| a - j as f64).product()
}

/// Weight of sample `i` when evaluating the fit at position `t`
/// (both in `-m..=m`).
fn weight(i: isize, t: isize, m: usize, order: usize) -> f64 {
    let mf = m as f64;
    (0..=order)
        .map(|k| {
            (2 * k + 1) as f64 * gen_fact(2.0 * mf, k) / gen_fact(2.0 * mf + k as f64 + 1.0, k + 1)
                * gram_poly(i as f64, mf, k)
                * gram_poly(t as f64, mf, k)
        })
        .sum()
}

/// Coefficients of the least-squares fit evaluated at offset `t` from the
/// window centre.
pub fn savgol_coefficients_at(window: usize, order: usize, t: isize) -> Vec<f64> {
    assert!(window % 2 == 1 && order < window);
    let m = window / 2;
    (-(m as isize)..=m as isize).map(|i| weight(i, t, m, order)).collect()
}

/// Central smoothing coefficients.
pub fn savgol_coefficients(window: usize, order: usize) -> Vec<f64> {
    savgol_coefficients_at(window, order, 0)
}

/// Filters one channel. Signals shorter than the window are returned as is.
pub fn savgol_filter(x: &[f64], window: usize, order: usize, edge: EdgeMode) -> Vec<f64> {
    let n = x.len();
    if n < window {
        return x.to_vec();
    }
    let m = window / 2;
    let center = savgol_coefficients(window, order);
    let conv = |coef: &[f64], start: usize| -> f64 { coef.iter().zip(&x[start..start + window]).map(|(c, v)| c * v).sum() };
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate().take(n - m).skip(m) {
        *o = conv(&center, i - m);
    }
    match edge {
        EdgeMode::Interp => {
            for i in 0..m {
                let coef = savgol_coefficients_at(window, order, i as isize - m as isize);
                out[i] = conv(&coef, 0);
                let coef = savgol_coefficients_at(window, order, (m - i) as isize);
                out[n - 1 - i] = conv(&coef, n - window);
            }
        }
        EdgeMode::Mirror => {
            let at = |k: isize| -> f64 {
                let k = if k < 0 {
                    -k
                } else if k >= n as isize {
                    2 * (n as isize - 1) - k
                } else {
                    k
                };
                x[k as usize]
            };
            for i in (0..m).chain(n - m..n) {
                out[i] = center
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * at(i as isize + j as isize - m as isize))
                    .sum();
            }
        }
    }
    out
}

/// Per-channel smoothing of a facial track (window 9, order 3).
pub fn savgol_smooth(track: &Track) -> Track {
    if track.len() < SAVGOL_WINDOW {
        return track.clone();
    }
    let mut out = track.clone();
    for c in 0..track.dim() {
        let y = savgol_filter(&track.channel(c), SAVGOL_WINDOW, SAVGOL_ORDER, EdgeMode::Interp);
        for (t, v) in y.into_iter().enumerate() {
            out.frame_mut(t)[c] = v;
        }
    }
    out
}
