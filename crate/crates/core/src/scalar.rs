//! Scalar abstraction shared by the network, sampler and trainer.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point type the numeric core is generic over.
///
/// Implemented for `f32` and `f64`. Everything in this crate that touches
/// network values is parameterized by a `Scalar`; the command line front end
/// and the serialized formats use `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Gauss error function.
    fn erf(self) -> Self;

    /// Converts an `f64` literal, saturating to infinity when out of range.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("every f64 converts to a Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn erf(self) -> Self {
        libm::erf(self)
    }
}

impl Scalar for f32 {
    fn erf(self) -> Self {
        libm::erff(self)
    }
}
