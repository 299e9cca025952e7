//! Uniform traversal over named parameter tensors.
//!
//! Gradients share the type of the parameters they belong to, so the
//! optimizer and the checkpoint writer walk both with the same visitor and
//! rely on a stable traversal order.

pub trait Params {
    /// Trainable tensors in a fixed order.
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64]));
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64]));

    /// Non-trainable state needed to reconstruct the object (permutations,
    /// signs, flags). Defaults to none.
    fn visit_buffers(&self, _prefix: &str, _f: &mut dyn FnMut(&str, &[f64])) {}
    fn visit_buffers_mut(&mut self, _prefix: &str, _f: &mut dyn FnMut(&str, &mut [f64])) {}

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit("", &mut |_, v| n += v.len());
        n
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit("", &mut |_, v| out.extend_from_slice(v));
        out
    }

    /// Inverse of [`Params::flatten`].
    fn assign_flat(&mut self, flat: &[f64]) {
        let mut off = 0;
        self.visit_mut("", &mut |_, v| {
            v.copy_from_slice(&flat[off..off + v.len()]);
            off += v.len();
        });
        assert_eq!(off, flat.len(), "flat parameter length mismatch");
    }

    fn names(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        self.visit("", &mut |n, v| out.push((n.to_string(), v.len())));
        out
    }
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}
