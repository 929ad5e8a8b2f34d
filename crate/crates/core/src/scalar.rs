//! Scalar abstraction for the decision-process core.
//!
//! The solver only needs ring arithmetic, an ordering and a way to lift
//! `f64` parameters into the working type, so it runs unchanged on `f32`,
//! `f64` and exact rationals.

use std::fmt;

use num_rational::{BigRational, Rational64};
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar:
    Num
    + Signed
    + PartialOrd
    + Clone
    + FromPrimitive
    + ToPrimitive
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    /// False for NaN and infinities. Rationals are always finite.
    fn is_finite_value(&self) -> bool;

    /// Lifts an `f64` into the scalar type.
    ///
    /// Panics on non-finite input for types that cannot represent it.
    fn lift(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(|| panic!("{value} is not representable"))
    }

    /// Nearest `f64`, used for reporting and grid export.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for BigRational {
    fn is_finite_value(&self) -> bool {
        true
    }
}

impl Scalar for Rational64 {
    fn is_finite_value(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lift_is_exact_for_dyadic_rationals() {
        let half: BigRational = Scalar::lift(0.5);
        assert_eq!(half, BigRational::new(1.into(), 2.into()));
        assert_eq!(<f32 as Scalar>::lift(0.25), 0.25f32);
    }

    #[test]
    fn finiteness() {
        assert!(!f64::NAN.is_finite_value());
        assert!(!f32::INFINITY.is_finite_value());
        assert!(Rational64::new(1, 3).is_finite_value());
    }
}
