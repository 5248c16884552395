//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + NumCast + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Tolerance used when checking that a vector or matrix column is stochastic.
    ///
    /// `1e-9` for `f64`; looser for narrower types where `1e-9` is below the
    /// representable resolution around 1.
    fn stochastic_tol() -> Self {
        let floor = Self::epsilon() * lit(1e3);
        let target = lit::<Self>(1e-9);
        if floor > target {
            floor
        } else {
            target
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into the scalar type.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

#[inline]
pub(crate) fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub(crate) fn from_usize<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("usize representable in scalar type")
}

/// Short decimal rendering for diagnostics: ten places, trailing zeros trimmed.
pub(crate) fn short<T: Scalar>(x: T) -> String {
    let s = format!("{:.10}", to_f64(x));
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}
