//! Scalar abstractions used across the crate.
//!
//! Two levels of genericity are needed:
//!
//! * [`Scalar`] — a field-like scalar with an order. Closed-form extremal
//!   lengths are rational functions of the surface parameters, so they are
//!   implemented at this level and can be evaluated both in floating point
//!   and in exact rational arithmetic.
//! * [`Real`] — a floating-point scalar (f32/f64). Everything involving
//!   logarithms, finite differences, descent, or tolerances lives here.
//!
//! Concrete `f64` aliases for the main public types are exported from the
//! crate root.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Ordered field scalar: enough structure for the closed-form extremal
/// lengths. Implemented for `f32`, `f64` and arbitrary-precision rationals.
pub trait Scalar: Clone + Num + PartialOrd + Debug {
    /// `false` only for non-finite floating-point values (NaN, ±inf).
    /// Exact types are always finite.
    fn finite(&self) -> bool {
        true
    }
}

impl Scalar for f32 {
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f64 {
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for BigRational {}

/// Floating-point scalar for the analytic layer (heights, derivatives,
/// descent). `of` converts pinned `f64` tolerances and literals.
pub trait Real:
    Float
    + Scalar
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; used for literals and tolerances.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal converts")
    }

    /// Lossy conversion to `f64`; used when emitting reports.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Exact rational from an integer, for tests and exact evaluation paths.
pub fn big_ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finiteness() {
        assert!(1.0f64.finite());
        assert!(!f64::INFINITY.finite());
        assert!(!f64::NAN.finite());
        assert!(big_ratio(7, 3).finite());
    }

    #[test]
    fn literal_conversion_round_trips() {
        let x: f64 = Real::of(1.25e-9);
        assert_eq!(x, 1.25e-9);
        let y: f32 = Real::of(0.5);
        assert_eq!(y, 0.5f32);
    }
}
