//! Scalar abstraction: everything numeric in this crate is generic over a
//! floating-point type. Concrete aliases for `f64` live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the crate (`f32` or `f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum<Self> + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 -> scalar conversion")
    }

    /// Conversion from an index or count.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize -> scalar conversion")
    }

    /// Lossy conversion to `f64` (used at serialization boundaries).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar -> f64 conversion")
    }

    fn two() -> Self {
        Self::of(2.0)
    }

    fn half() -> Self {
        Self::of(0.5)
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Sum<T> + Debug + Display + Send + Sync + 'static
{
}
