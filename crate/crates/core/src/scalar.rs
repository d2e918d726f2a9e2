//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
///
/// Tolerances in this crate are expressed as `f64` literals and converted with
/// [`Real::lit`]; [`Real::tol`] clamps them to something representable for the
/// narrower type.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal must be representable")
    }

    /// A tolerance no tighter than a few ulps of `Self`.
    #[inline]
    fn tol(x: f64) -> Self {
        Self::lit(x).max(Self::epsilon() * Self::lit(64.0))
    }

    /// Lossy conversion used for diagnostics.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts a count.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count must be representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `x^p` with the convention `0^p = 0` for every exponent.
///
/// Tilted matrices raise transition probabilities to powers that may be
/// negative; a zero probability must stay a zero entry.
#[inline]
pub(crate) fn pow0<T: Real>(x: T, p: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        x.powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_base_stays_zero() {
        assert_eq!(pow0(0.0_f64, -3.0), 0.0);
        assert_eq!(pow0(0.0_f64, 0.0), 0.0);
        assert!((pow0(0.25_f64, 0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tolerance_floor_for_f32() {
        assert!(f32::tol(1e-12) > 1e-12);
        assert_eq!(f64::tol(1e-9), 1e-9);
    }
}
