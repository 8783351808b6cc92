//! Scalar abstraction: the numeric kernels are generic over `f32`/`f64`.
//!
//! [`Real`] is the bound used by grid/field code; [`Scalar`] adds what the
//! FFT engine needs.  Special functions and quadrature evaluate internally in
//! `f64` (their cancellation-sensitive sums would be meaningless in `f32`)
//! and convert at the boundary, so `f32` fields see `f32`-rounded values of
//! the full-precision result.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Real floating-point scalar (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64` (exact for `f64`, rounded for `f32`).
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Real")
    }

    /// Widening conversion to `f64` (exact for both supported types).
    fn f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Scalar usable by both the analytic kernels and the FFT engine.
pub trait Scalar: Real + rustfft::FftNum {}
impl<T: Real + rustfft::FftNum> Scalar for T {}

/// Shorthand for a complex number over a generic scalar.
pub type C<T> = Complex<T>;

/// Complex `f64`, the concrete type used by the metrology layers.
pub type C64 = Complex<f64>;
