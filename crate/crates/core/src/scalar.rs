//! Scalar abstraction over the floating-point types used by the library.
//!
//! All numeric code is generic over [`Scalar`]; `f32` and `f64` are the two
//! implementations. Concrete `f64` aliases live at the crate root.

use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + num_traits::NumAssign
    + std::iter::Sum
    + std::fmt::Display
    + std::fmt::Debug
    + Default
    + Send
    + Sync
    + 'static
{
    /// One draw from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One draw from the uniform distribution on `[0, 1)`.
    fn uniform01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn to_f64_lossy(self) -> f64;

    /// Conversion for constants and tolerances; panics on non-convertible input.
    fn from_f64_lossy(v: f64) -> Self {
        num_traits::FromPrimitive::from_f64(v).expect("f64 constant converts to scalar")
    }

    fn from_usize_lossy(v: usize) -> Self {
        num_traits::FromPrimitive::from_usize(v).expect("usize converts to scalar")
    }

    /// `max(1, |x|)`; scale factor for mixed absolute/relative tolerances.
    fn tol_scale(self) -> Self {
        self.abs().max(Self::one())
    }
}

impl Scalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn uniform01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }

    fn to_f64_lossy(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn uniform01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }

    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}
