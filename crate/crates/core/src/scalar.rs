//! Scalar abstraction for probability and expectation arithmetic.
//!
//! Every probability that arises in the rounding processes is a dyadic
//! rational, so a scalar only needs to be constructible from `num / 2^exp`.
//! [`Exact`](crate::Exact) is used wherever an invariant depends on the
//! result; [`Approx`](crate::Approx) is handy for quick estimates and
//! cross-checks against sampling.

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
{
    /// The value `num / 2^log2_den`.
    fn from_dyadic(num: u128, log2_den: u32) -> Self;

    /// The value `num / 2^log2_den` for an arbitrary-size numerator.
    fn from_big_dyadic(num: &BigUint, log2_den: u32) -> Self;

    fn to_f64(&self) -> f64;

    fn from_count(count: u64) -> Self {
        Self::from_dyadic(count as u128, 0)
    }
}

impl Scalar for f64 {
    fn from_dyadic(num: u128, log2_den: u32) -> Self {
        (num as f64) * 2f64.powi(-(log2_den as i32))
    }

    fn from_big_dyadic(num: &BigUint, log2_den: u32) -> Self {
        // Keep the top 64 bits so huge numerators do not overflow.
        let shift = num.bits().saturating_sub(64) as u32;
        let top = (num >> shift).to_u64().unwrap_or(u64::MAX) as f64 * 2f64.powi(-64);
        top * 2f64.powi(shift as i32 + 64 - log2_den as i32)
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn from_dyadic(num: u128, log2_den: u32) -> Self {
        BigRational::new(BigInt::from(num), BigInt::one() << log2_den)
    }

    fn from_big_dyadic(num: &BigUint, log2_den: u32) -> Self {
        BigRational::new(BigInt::from(num.clone()), BigInt::one() << log2_den)
    }

    fn to_f64(&self) -> f64 {
        // Ratio::to_f64 handles huge numerators and denominators.
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Exact `2^-exp` as a rational.
pub fn pow2_neg(exp: u32) -> BigRational {
    BigRational::from_dyadic(1, exp)
}

/// `n^-power` as an exact rational.
pub fn inv_pow(n: usize, power: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(n.max(1)).pow(power))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_constructors_agree() {
        let e = BigRational::from_dyadic(3, 3);
        assert_eq!(e, BigRational::new(3.into(), 8.into()));
        assert_eq!(f64::from_dyadic(3, 3), 0.375);
        assert_eq!(Scalar::to_f64(&e), 0.375);
        let big = BigUint::from(3u32) << 200;
        assert_eq!(BigRational::from_big_dyadic(&big, 203), e);
        assert_eq!(f64::from_big_dyadic(&big, 203), 0.375);
        assert_eq!(inv_pow(2, 3), BigRational::new(1.into(), 8.into()));
    }
}
