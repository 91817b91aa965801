//! Scalar abstraction for everything downstream of the label maps.
//!
//! Histogram weights, distances and retrieval metrics are plain floating
//! point math, so they are written once over [`Scalar`] and instantiated
//! as `f32` or `f64` (aliases at the crate root). Pixel rasters and zone
//! geometry stay in integer types on purpose: zone boundaries must not
//! drift with the float width.

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable for descriptor values and scores.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Lossless-enough conversion from a pixel or bin count.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable as scalar")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + Sum
        + fmt::Debug
        + fmt::Display
        + Send
        + Sync
        + 'static
{
}
