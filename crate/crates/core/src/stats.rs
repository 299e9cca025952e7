//! Summary statistics and the paired t-test used by the evaluation.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (`n − 1` denominator); 0 for fewer than two values.
pub fn std_dev(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTTest {
    pub n: usize,
    pub mean_diff: f64,
    pub t: f64,
    /// `P(T ≥ t)` under H0, for the alternative `mean(a − b) > 0`.
    pub p_greater: f64,
    pub p_two_sided: f64,
}

/// Paired t-test on `a[i] − b[i]`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTTest> {
    if a.len() != b.len() {
        return Err(Error::Dimension { context: "paired samples", expected: a.len(), got: b.len() });
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData("paired t-test needs at least 2 pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len();
    let m = mean(&d);
    let se = std_dev(&d) / (n as f64).sqrt();
    let t = if se > 0.0 {
        m / se
    } else if m > 0.0 {
        f64::INFINITY
    } else if m < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    };
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("n >= 2 gives positive degrees of freedom");
    let p_greater = if t.is_finite() { dist.sf(t) } else if t > 0.0 { 0.0 } else { 1.0 };
    let p_two_sided = if t.is_finite() { 2.0 * dist.sf(t.abs()) } else { 0.0 };
    let p_two_sided = if m == 0.0 && se == 0.0 { 1.0 } else { p_two_sided };
    Ok(PairedTTest { n, mean_diff: m, t, p_greater, p_two_sided })
}
