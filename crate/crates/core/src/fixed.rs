//! Transmittable fixed-point values in `[0, 1]`.
//!
//! A value is stored as `num / 2^scale`. Within one run all values share the
//! scale `ι`, the smallest integer with `2^-ι <= n^-10`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest supported scale; keeps sums of up to `2^17` values inside `u128`.
pub const MAX_SCALE: u32 = 110;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct FixedPoint {
    num: u128,
    scale: u32,
}

/// Smallest `ι` with `2^ι >= n^10`.
pub fn iota(n: usize) -> Result<u32> {
    if n <= 1 {
        return Ok(0);
    }
    let target = BigUint::from(n).pow(10);
    let bits = (&target - 1u32).bits() as u32;
    if bits > MAX_SCALE {
        return Err(Error::TooLarge(format!(
            "n = {n} needs scale {bits} > {MAX_SCALE}"
        )));
    }
    Ok(bits)
}

impl FixedPoint {
    pub fn new(num: u128, scale: u32) -> Result<Self> {
        if scale > MAX_SCALE || num > (1u128 << scale) {
            return Err(Error::Domain(format!("{num}/2^{scale} is not in [0,1]")));
        }
        Ok(FixedPoint { num, scale })
    }

    pub fn zero(scale: u32) -> Self {
        FixedPoint { num: 0, scale }
    }

    pub fn one(scale: u32) -> Self {
        FixedPoint {
            num: 1u128 << scale,
            scale,
        }
    }

    /// `1 / 2^exp` at the given scale (`exp <= scale`).
    pub fn pow2_inv(exp: u32, scale: u32) -> Self {
        debug_assert!(exp <= scale);
        FixedPoint {
            num: 1u128 << (scale - exp),
            scale,
        }
    }

    pub fn numerator(self) -> u128 {
        self.num
    }

    pub fn scale(self) -> u32 {
        self.scale
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn is_one(self) -> bool {
        self.num == 1u128 << self.scale
    }

    pub fn to_f64(self) -> f64 {
        f64::from_dyadic(self.num, self.scale)
    }

    pub fn to_exact(self) -> BigRational {
        BigRational::from_dyadic(self.num, self.scale)
    }

    pub fn to_scalar<S: Scalar>(self) -> S {
        S::from_dyadic(self.num, self.scale)
    }

    /// Smallest multiple of `2^-scale` that is `>= v`, capped at 1.
    pub fn quantize_up_at(v: f64, scale: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&v) || v.is_nan() {
            return Err(Error::Domain(format!("{v} is outside [0,1]")));
        }
        // Scaling by a power of two is exact in binary floating point.
        let scaled = (v * 2f64.powi(scale as i32)).ceil();
        let num = (scaled as u128).min(1u128 << scale);
        Ok(FixedPoint { num, scale })
    }

    /// Rounds an exact value in `[0,1]` up to the grid `2^-scale`.
    pub fn quantize_exact_up(v: &BigRational, scale: u32) -> Result<Self> {
        if v.is_negative() || *v > BigRational::one() {
            return Err(Error::Domain(format!("{v} is outside [0,1]")));
        }
        let num = ceil_to_grid(v, scale);
        Ok(FixedPoint { num, scale })
    }

    /// Rounds up to a multiple of `2^-bits`, keeping the current scale.
    pub fn requantize_up(self, bits: u32) -> Self {
        if bits >= self.scale {
            return self;
        }
        let step = 1u128 << (self.scale - bits);
        let num = self.num.div_ceil(step) * step;
        FixedPoint { num, ..self }
    }

    /// Whether the value is a multiple of `2^-bits`.
    pub fn is_multiple_of_pow2(self, bits: u32) -> bool {
        bits >= self.scale || self.num.is_multiple_of(1u128 << (self.scale - bits))
    }

    /// `self / p` rounded up to the grid and capped at 1. `p` must be positive.
    pub fn div_up_capped(self, p: FixedPoint) -> Self {
        debug_assert_eq!(self.scale, p.scale);
        assert!(p.num > 0, "division by a zero probability");
        if self.num >= p.num {
            return FixedPoint::one(self.scale);
        }
        let n = BigUint::from(self.num) << self.scale;
        let (q, r) = n.div_rem(&BigUint::from(p.num));
        let mut q = q.to_u128().expect("quotient below 2^scale");
        if !r.is_zero() {
            q += 1;
        }
        FixedPoint {
            num: q.min(1u128 << self.scale),
            scale: self.scale,
        }
    }

    /// `min(1, self * factor)` rounded up to the grid.
    pub fn scale_up_capped(self, factor: f64) -> Result<Self> {
        let v = (self.to_f64() * factor).min(1.0);
        let q = FixedPoint::quantize_up_at(v, self.scale)?;
        // Never drop below the unscaled value when factor >= 1.
        Ok(if factor >= 1.0 && q < self { self } else { q })
    }

    pub fn saturating_add(self, other: FixedPoint) -> Self {
        debug_assert_eq!(self.scale, other.scale);
        FixedPoint {
            num: (self.num + other.num).min(1u128 << self.scale),
            scale: self.scale,
        }
    }

    pub fn max(self, other: FixedPoint) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

/// `ceil(v * 2^scale)` for a non-negative rational `v`.
pub fn ceil_to_grid(v: &BigRational, scale: u32) -> u128 {
    let scaled = v * BigRational::from_integer(BigInt::one() << scale);
    scaled
        .ceil()
        .to_integer()
        .to_u128()
        .expect("grid numerator fits in u128")
}

impl PartialOrd for FixedPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FixedPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        let s = self.scale.max(other.scale);
        (self.num << (s - self.scale)).cmp(&(other.num << (s - other.scale)))
    }
}

impl fmt::Debug for FixedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.scale)
    }
}

impl fmt::Display for FixedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Smallest multiple of `2^-ι(n)` that is `>= v`, capped at 1.
pub fn quantize_up(v: f64, n: usize) -> Result<FixedPoint> {
    FixedPoint::quantize_up_at(v, iota(n)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn iota_matches_definition() {
        assert_eq!(iota(1).unwrap(), 0);
        assert_eq!(iota(2).unwrap(), 10);
        assert_eq!(iota(3).unwrap(), 16); // 3^10 = 59049 <= 2^16
        assert_eq!(iota(8).unwrap(), 30);
        assert_eq!(iota(16).unwrap(), 40);
        assert!(iota(1 << 12).is_err());
    }

    #[test]
    fn quantize_examples() {
        let q = quantize_up(0.3, 2).unwrap();
        assert_eq!((q.numerator(), q.scale()), (308, 10));
        assert!(quantize_up(0.0, 2).unwrap().is_zero());
        assert!(quantize_up(1.0, 2).unwrap().is_one());
        assert!(quantize_up(1.5, 2).is_err());
        assert!(quantize_up(-0.1, 2).is_err());
    }

    #[test]
    fn division_and_requantization() {
        let x = FixedPoint::new(256, 10).unwrap(); // 0.25
        let p = FixedPoint::new(512, 10).unwrap(); // 0.5
        assert_eq!(x.div_up_capped(p), FixedPoint::new(512, 10).unwrap());
        assert!(p.div_up_capped(x).is_one());
        let third = FixedPoint::new(342, 10).unwrap();
        assert_eq!(third.requantize_up(4).numerator(), 384);
        assert!(FixedPoint::new(384, 10).unwrap().is_multiple_of_pow2(4));
        assert!(!third.is_multiple_of_pow2(4));
    }

    proptest! {
        #[test]
        fn quantize_up_is_tight(v in 0.0f64..=1.0, n in 2usize..200) {
            let q = quantize_up(v, n).unwrap();
            let step = 2f64.powi(-(q.scale() as i32));
            prop_assert!(q.to_f64() >= v);
            prop_assert!(q.to_f64() <= v + step);
        }
    }
}
