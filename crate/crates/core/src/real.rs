use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst};

/// Floating-point scalar the flow layers are generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + Default + Sum + AddAssign + SubAssign + MulAssign + Debug + Display + Send + Sync + 'static
{
    fn c(v: f64) -> Self;
    fn f64(self) -> f64;
}

impl Real for f32 {
    fn c(v: f64) -> Self {
        v as f32
    }
    fn f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn c(v: f64) -> Self {
        v
    }
    fn f64(self) -> f64 {
        self
    }
}
