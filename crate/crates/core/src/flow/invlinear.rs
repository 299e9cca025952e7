use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::params::{join, Params};
use crate::real::Real;

use super::{Direction, FlowResult};

/// Invertible channel mixing `W = P · L · (U + diag(sign ⊙ exp(log_diag)))`.
///
/// `lower` and `upper` are stored as dense `d × d` row-major matrices; only
/// the strictly lower (resp. strictly upper) triangle is read, and gradients
/// outside those triangles are always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct InvLinear<T = f64> {
    /// `y[i] = (L U x)[perm[i]]`.
    pub perm: Vec<usize>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub log_diag: Vec<T>,
    pub sign: Vec<T>,
}

impl<T: Real> InvLinear<T> {
    pub fn identity(d: usize) -> Self {
        Self {
            perm: (0..d).collect(),
            lower: vec![T::zero(); d * d],
            upper: vec![T::zero(); d * d],
            log_diag: vec![T::zero(); d],
            sign: vec![T::one(); d],
        }
    }

    /// Random permutation and signs, triangular entries with standard
    /// deviation `spread / sqrt(d)`, log-diagonal with standard deviation
    /// `diag_spread`.
    pub fn random<R: Rng + ?Sized>(d: usize, spread: f64, diag_spread: f64, rng: &mut R) -> Self {
        let mut p = Self::identity(d);
        p.perm.shuffle(rng);
        let off = Normal::new(0.0, spread / (d as f64).sqrt()).unwrap();
        let diag = Normal::new(0.0, diag_spread).unwrap();
        for i in 0..d {
            for j in 0..d {
                if j < i {
                    p.lower[i * d + j] = T::c(off.sample(rng));
                } else if j > i {
                    p.upper[i * d + j] = T::c(off.sample(rng));
                }
            }
            p.log_diag[i] = T::c(diag.sample(rng));
            p.sign[i] = if rng.random::<bool>() { T::one() } else { -T::one() };
        }
        p
    }

    /// LU factorization (with partial pivoting) of a uniformly random
    /// rotation, as in Glow: well conditioned at any width, `|logdet| ≈ 0`.
    pub fn rotation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        Self::from_rows(random_orthogonal(d, rng))
    }

    /// Pivoted LU factorization of a nonsingular `d x d` matrix given by rows.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let d = rows.len();
        assert!(rows.iter().all(|r| r.len() == d), "matrix must be square");
        // Doolittle elimination with row pivoting: rows[piv[i]] = (L U)[i].
        let mut a = rows;
        let mut piv: Vec<usize> = (0..d).collect();
        let mut lower = vec![0.0; d * d];
        for k in 0..d {
            let p = (k..d).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, p);
            piv.swap(k, p);
            for j in 0..k {
                lower.swap(k * d + j, p * d + j);
            }
            for i in k + 1..d {
                let f = a[i][k] / a[k][k];
                lower[i * d + k] = f;
                for j in k..d {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
        let mut out = Self::identity(d);
        for (i, &src) in piv.iter().enumerate() {
            out.perm[src] = i;
        }
        for i in 0..d {
            for j in 0..d {
                if j < i {
                    out.lower[i * d + j] = T::c(lower[i * d + j]);
                } else if j > i {
                    out.upper[i * d + j] = T::c(a[i][j]);
                }
            }
            out.log_diag[i] = T::c(a[i][i].abs().ln());
            out.sign[i] = if a[i][i] < 0.0 { -T::one() } else { T::one() };
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.log_diag.len()
    }

    fn diag(&self, i: usize) -> T {
        self.sign[i] * self.log_diag[i].exp()
    }

    pub fn logdet(&self) -> T {
        self.log_diag.iter().copied().sum()
    }

    /// Dense reconstruction of `W`, row-major.
    pub fn matrix(&self) -> Vec<T> {
        let d = self.dim();
        let mut w = vec![T::zero(); d * d];
        for col in 0..d {
            let mut e = vec![T::zero(); d];
            e[col] = T::one();
            let mut y = Vec::new();
            let mut u = Vec::new();
            self.forward_into(&e, &mut y, &mut u);
            for row in 0..d {
                w[row * d + col] = y[row];
            }
        }
        w
    }

    pub fn apply(&self, x: &[T], dir: Direction) -> FlowResult<T> {
        let mut output = Vec::with_capacity(x.len());
        let mut scratch = Vec::with_capacity(x.len());
        let logdet = match dir {
            Direction::Forward => self.forward_into(x, &mut output, &mut scratch),
            Direction::Inverse => self.inverse_into(x, &mut output, &mut scratch),
        };
        FlowResult { output, logdet }
    }

    /// Writes `W x` into `y` and the intermediate `(U + D) x` into `u`.
    ///
    /// Both triangular passes accumulate in double precision and round once
    /// per output, which keeps single-precision round trips within a few ulps.
    pub fn forward_into(&self, x: &[T], y: &mut Vec<T>, u: &mut Vec<T>) -> T {
        let d = self.dim();
        let mut u64 = vec![0.0f64; d];
        for i in 0..d {
            let row = &self.upper[i * d..(i + 1) * d];
            let mut acc = self.diag(i).f64() * x[i].f64();
            for j in i + 1..d {
                acc += row[j].f64() * x[j].f64();
            }
            u64[i] = acc;
        }
        let mut l = vec![0.0f64; d];
        for i in 0..d {
            let row = &self.lower[i * d..(i + 1) * d];
            let mut acc = u64[i];
            for j in 0..i {
                acc += row[j].f64() * u64[j];
            }
            l[i] = acc;
        }
        u.clear();
        u.extend(u64.iter().map(|&v| T::c(v)));
        y.clear();
        y.extend(self.perm.iter().map(|&p| T::c(l[p])));
        self.logdet()
    }

    pub fn inverse_into(&self, y: &[T], x: &mut Vec<T>, u: &mut Vec<T>) -> T {
        let d = self.dim();
        let mut l = vec![0.0f64; d];
        for (i, &p) in self.perm.iter().enumerate() {
            l[p] = y[i].f64();
        }
        // L u = l
        let mut u64 = vec![0.0f64; d];
        for i in 0..d {
            let row = &self.lower[i * d..(i + 1) * d];
            let mut acc = l[i];
            for j in 0..i {
                acc -= row[j].f64() * u64[j];
            }
            u64[i] = acc;
        }
        // (U + D) x = u
        let mut x64 = vec![0.0f64; d];
        for i in (0..d).rev() {
            let row = &self.upper[i * d..(i + 1) * d];
            let mut acc = u64[i];
            for j in i + 1..d {
                acc -= row[j].f64() * x64[j];
            }
            x64[i] = acc / self.diag(i).f64();
        }
        u.clear();
        u.extend(u64.iter().map(|&v| T::c(v)));
        x.clear();
        x.extend(x64.iter().map(|&v| T::c(v)));
        -self.logdet()
    }

    /// Reverse-mode pass for the forward direction. `x` and `u` are the
    /// input and the intermediate from [`InvLinear::forward_into`].
    pub fn backward(
        &self,
        x: &[T],
        u: &[T],
        g_y: &[T],
        g_logdet: T,
        grad: &mut InvLinear<T>,
        g_x: &mut [T],
    ) {
        let d = self.dim();
        let mut g_l = vec![T::zero(); d];
        for (i, &p) in self.perm.iter().enumerate() {
            g_l[p] = g_y[i];
        }
        let mut g_u = g_l.clone();
        for i in 0..d {
            let gi = g_l[i];
            let row = &self.lower[i * d..(i + 1) * d];
            let grow = &mut grad.lower[i * d..(i + 1) * d];
            for j in 0..i {
                grow[j] += gi * u[j];
                g_u[j] += row[j] * gi;
            }
        }
        for gx in g_x.iter_mut() {
            *gx = T::zero();
        }
        for i in 0..d {
            let gi = g_u[i];
            let di = self.diag(i);
            grad.log_diag[i] += gi * x[i] * di + g_logdet;
            g_x[i] += di * gi;
            let row = &self.upper[i * d..(i + 1) * d];
            let grow = &mut grad.upper[i * d..(i + 1) * d];
            for j in i + 1..d {
                grow[j] += gi * x[j];
                g_x[j] += row[j] * gi;
            }
        }
    }

    pub fn zeros_like(&self) -> Self {
        let d = self.dim();
        Self {
            perm: self.perm.clone(),
            lower: vec![T::zero(); d * d],
            upper: vec![T::zero(); d * d],
            log_diag: vec![T::zero(); d],
            sign: self.sign.clone(),
        }
    }

    pub fn cast<U: Real>(&self) -> InvLinear<U> {
        let c = |v: &[T]| v.iter().map(|x| U::c(x.f64())).collect();
        InvLinear {
            perm: self.perm.clone(),
            lower: c(&self.lower),
            upper: c(&self.upper),
            log_diag: c(&self.log_diag),
            sign: c(&self.sign),
        }
    }
}

impl Params for InvLinear<f64> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&join(prefix, "lower"), &self.lower);
        f(&join(prefix, "upper"), &self.upper);
        f(&join(prefix, "log_diag"), &self.log_diag);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&join(prefix, "lower"), &mut self.lower);
        f(&join(prefix, "upper"), &mut self.upper);
        f(&join(prefix, "log_diag"), &mut self.log_diag);
    }

    fn visit_buffers(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        let perm: Vec<f64> = self.perm.iter().map(|&p| p as f64).collect();
        f(&join(prefix, "perm"), &perm);
        f(&join(prefix, "sign"), &self.sign);
    }

    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        let mut perm: Vec<f64> = self.perm.iter().map(|&p| p as f64).collect();
        f(&join(prefix, "perm"), &mut perm);
        self.perm = perm.iter().map(|&p| p as usize).collect();
        f(&join(prefix, "sign"), &mut self.sign);
    }
}

/// Uniformly random orthogonal matrix (modified Gram-Schmidt on Gaussian
/// rows), returned by rows.
pub fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(d);
    while q.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| normal.sample(rng)).collect();
        for u in &q {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            q.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    q
}
