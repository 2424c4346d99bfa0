//! Scalar abstraction so the numeric core runs on `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, NumAssign};
use rand::distr::uniform::SampleUniform;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

/// Floating-point scalar used throughout the numeric core.
///
/// Implemented for `f32` and `f64`; everything downstream (losses, signals,
/// the trainer) is generic over this trait, with `f64` aliases exported at
/// the crate root. Deserialization bounds are left to each use site so the
/// serde derives can infer theirs without ambiguity.
pub trait Scalar:
    Float + NumAssign + Sum + SampleUniform + Debug + Display + Serialize + Send + Sync + 'static
{
    /// Draw from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossy conversion from `f64`, for constants and config defaults.
    fn from_f64(x: f64) -> Self {
        Self::from(x).expect("f64 constant convertible to scalar")
    }

    /// Lossy conversion from a count, for means and normalizations.
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_f64(n as f64)
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Scalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}
