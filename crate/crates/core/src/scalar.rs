//! Floating-point abstraction for the scoring and analysis code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

pub trait Scalar: Float + FromPrimitive + Default + Debug + Display + Send + Sync + 'static {
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("counts are representable")
    }

    /// `num / den`, or zero when `den` is zero.
    fn ratio(num: usize, den: usize) -> Self {
        if den == 0 {
            Self::zero()
        } else {
            Self::from_count(num) / Self::from_count(den)
        }
    }

    /// Harmonic mean of two non-negative values; zero when both are zero.
    fn harmonic(a: Self, b: Self) -> Self {
        let sum = a + b;
        if sum == Self::zero() {
            Self::zero()
        } else {
            (a * b + a * b) / sum
        }
    }
}

impl<T> Scalar for T where T: Float + FromPrimitive + Default + Debug + Display + Send + Sync + 'static {}
