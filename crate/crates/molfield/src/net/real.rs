//! Scalar abstraction for the network stack: f64 (default) or f32 (fast mode).

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::Float;

/// Floating-point element type for network parameters and activations.
/// Gradient checks and the default training path use f64; f32 is the
/// opt-in fast mode.
pub trait Real:
    Float + LinalgScalar + ScalarOperand + Send + Sync + std::fmt::Debug + std::fmt::Display + 'static
{
    fn from_f64(x: f64) -> Self;
    fn into_f64(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn into_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn into_f64(self) -> f64 {
        self as f64
    }
}
