//! Numeric abstraction for the road-metric layer.
//!
//! Travel-time functions and graph queries are written against [`Scalar`] so
//! they work for `f32` and `f64` alike. The scheduling layers above fix the
//! scalar to `f64` through the aliases exported at the crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type usable as seconds or meters.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only for non-representable input.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    /// Absolute tolerance used for time and distance comparisons.
    fn tolerance() -> Self {
        Self::lit(1e-6)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Total order on scalars that treats NaN as equal to everything.
pub(crate) fn cmp<T: Scalar>(a: T, b: T) -> std::cmp::Ordering {
    a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal)
}
