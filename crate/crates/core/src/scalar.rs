//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
///
/// Everything geometric in this crate is written against `Real`; the
/// aliases at the crate root fix it to `f64`, which is what the file
/// formats and tolerances are sized for.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + serde::Serialize
    + serde::de::DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Never fails for finite inputs.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits in a float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }

    /// Machine-epsilon based rounding bound `n·u / (1 − n·u)`.
    #[inline]
    fn gamma(n: u32) -> Self {
        let nu = Self::from_u32(n).unwrap() * Self::epsilon() * Self::lit(0.5);
        nu / (Self::one() - nu)
    }
}

impl Real for f32 {}
impl Real for f64 {}
