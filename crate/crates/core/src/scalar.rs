//! Scalar abstraction for transition probabilities.
//!
//! Kernels, stationary laws, mixing-time scans and coupling ledgers are
//! generic over [`Scalar`]: `f64`/`f32` for fast numerics, [`Exact`]
//! (big rationals) where results must carry no rounding error.

use std::fmt::Debug;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{Num, Signed, ToPrimitive};

/// Arbitrary-precision rational, the exact scalar.
pub type Exact = BigRational;

/// Probability-like number usable by the exact-analysis routines.
pub trait Scalar:
    Num + Signed + Clone + Debug + PartialOrd + AddAssign + SubAssign + MulAssign + Send + Sync + 'static
{
    fn from_rational(r: Rational64) -> Self;

    fn as_f64(&self) -> f64;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        Self::from_rational(Rational64::new(numer, denom))
    }

    fn from_usize(n: usize) -> Self {
        Self::from_rational(Rational64::from_integer(n as i64))
    }

    /// Whether this scalar type represents rationals exactly.
    fn is_exact() -> bool {
        false
    }
}

impl Scalar for f64 {
    fn from_rational(r: Rational64) -> Self {
        *r.numer() as f64 / *r.denom() as f64
    }

    fn as_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_rational(r: Rational64) -> Self {
        (*r.numer() as f64 / *r.denom() as f64) as f32
    }

    fn as_f64(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for BigRational {
    fn from_rational(r: Rational64) -> Self {
        BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
    }

    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_exact() -> bool {
        true
    }
}
