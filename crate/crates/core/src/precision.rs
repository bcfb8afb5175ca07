//! Working-precision plumbing shared by the analytic kernel and the oracle.

use std::f64::consts::LN_2;

use dashu_base::{BitTest, SquareRoot, UnsignedAbs};
use dashu_float::{round::mode::HalfEven, FBig};
use dashu_int::UBig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary extended-precision float used for every quantity that may leave
/// the double range or needs more than 53 bits.
pub type Real = FBig<HalfEven, 2>;

/// Working precision and series truncation controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    pub mantissa_bits: usize,
    /// Absolute bound on the discarded tail of any summed series.
    pub tail_epsilon: f64,
    pub max_terms: usize,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        Self {
            mantissa_bits: 256,
            tail_epsilon: 1e-30,
            max_terms: 100_000,
        }
    }
}

impl PrecisionPolicy {
    pub fn new(mantissa_bits: usize, tail_epsilon: f64, max_terms: usize) -> Result<Self> {
        let policy = Self {
            mantissa_bits,
            tail_epsilon,
            max_terms,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mantissa_bits < 64 {
            return Err(Error::InvalidPolicy("mantissa_bits must be at least 64"));
        }
        if !(self.tail_epsilon > 0.0 && self.tail_epsilon < 1.0) {
            return Err(Error::InvalidPolicy("tail_epsilon must lie in (0, 1)"));
        }
        if self.max_terms < 1 {
            return Err(Error::InvalidPolicy("max_terms must be at least 1"));
        }
        Ok(())
    }

    /// Exact conversion of a finite double, rounded to the working precision.
    pub fn real(&self, x: f64) -> Real {
        Real::try_from(x)
            .expect("finite input validated by caller")
            .with_precision(self.mantissa_bits)
            .value()
    }

    pub fn int(&self, n: u64) -> Real {
        Real::from(n).with_precision(self.mantissa_bits).value()
    }

    pub fn ubig(&self, n: UBig) -> Real {
        Real::from(n).with_precision(self.mantissa_bits).value()
    }

    pub fn zero(&self) -> Real {
        self.int(0)
    }

    pub fn one(&self) -> Real {
        self.int(1)
    }
}

pub fn to_f64(x: &Real) -> f64 {
    x.to_f64().value()
}

pub fn sqrt(x: &Real) -> Real {
    x.sqrt()
}

pub fn is_zero(x: &Real) -> bool {
    x.repr().significand().is_zero()
}

pub fn is_negative(x: &Real) -> bool {
    x.repr().significand() < &dashu_int::IBig::ZERO
}

/// Natural log of |x| as a double, valid far outside the double range of x.
pub fn ln_abs(x: &Real) -> f64 {
    let repr = x.repr();
    let sig = repr.significand();
    if sig.is_zero() {
        return f64::NEG_INFINITY;
    }
    let mag = sig.clone().unsigned_abs();
    let bits = mag.bit_len();
    let shift = bits.saturating_sub(62);
    let top = &mag >> shift;
    let top = top.to_f64().value();
    top.ln() + (repr.exponent() as f64 + shift as f64) * LN_2
}

/// |x| / |y| - 1 as a double, with y = 0 treated as exact agreement only when x = 0.
pub fn relative_difference(x: &Real, y: &Real) -> f64 {
    if is_zero(y) {
        return if is_zero(x) { 0.0 } else { f64::INFINITY };
    }
    let diff = (x - y) / y;
    to_f64(&diff).abs()
}

pub fn binomial(n: u64, k: u64) -> UBig {
    if k > n {
        return UBig::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = UBig::ONE;
    for i in 0..k {
        acc = acc * UBig::from(n - i) / UBig::from(i + 1);
    }
    acc
}

/// n! / (n - j)!
pub fn falling_factorial(n: u64, j: u64) -> UBig {
    if j > n {
        return UBig::ZERO;
    }
    (n - j + 1..=n).fold(UBig::ONE, |acc, i| acc * UBig::from(i))
}

pub fn factorial(n: u64) -> UBig {
    falling_factorial(n, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_abs_matches_f64_ln_in_range() {
        let p = PrecisionPolicy::default();
        for x in [1e-300, 0.003, 1.0, 2.5, 1e200] {
            assert!((ln_abs(&p.real(x)) - x.ln()).abs() < 1e-12 * x.ln().abs().max(1.0));
        }
        assert_eq!(ln_abs(&p.zero()), f64::NEG_INFINITY);
    }

    #[test]
    fn ln_abs_beyond_double_range() {
        let p = PrecisionPolicy::default();
        let big = p.ubig(factorial(300));
        let expected: f64 = (1..=300).map(|i| (i as f64).ln()).sum();
        assert!((ln_abs(&big) - expected).abs() < 1e-9);
    }

    #[test]
    fn combinatorics() {
        assert_eq!(binomial(10, 3), UBig::from(120u32));
        assert_eq!(binomial(3, 5), UBig::ZERO);
        assert_eq!(falling_factorial(6, 2), UBig::from(30u32));
        assert_eq!(factorial(0), UBig::ONE);
    }

    #[test]
    fn policy_validation() {
        assert!(PrecisionPolicy::new(32, 1e-30, 10).is_err());
        assert!(PrecisionPolicy::new(128, 0.0, 10).is_err());
        assert!(PrecisionPolicy::new(128, 1e-20, 0).is_err());
        assert!(PrecisionPolicy::new(128, 1e-20, 1).is_ok());
    }
}
