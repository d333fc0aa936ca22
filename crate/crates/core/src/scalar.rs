//! Scalar abstraction shared by the exact (rational) and floating-point paths.
//!
//! Every transition weight of the chain is a polynomial in the bond weight
//! `w = e^{-2J}` with rational coefficients, so kernels, Gibbs weights and the
//! perturbative expansion can all be evaluated in any ordered field. `f64` is
//! the workhorse; [`BigRational`] gives bit-exact answers for small chains.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, NumAssign, Signed, ToPrimitive};

/// An ordered field usable as a probability/weight type.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Signed
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// Whether the type represents values exactly (no rounding).
    const EXACT: bool;

    fn from_usize_lossless(n: usize) -> Self {
        Self::from_usize(n).expect("integer fits in scalar")
    }

    /// `num / den` computed in the field.
    fn ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num).expect("integer fits in scalar")
            / Self::from_i64(den).expect("integer fits in scalar")
    }

    /// Nearest `f64`; `NaN` when the value has no finite representation.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `self^n` by repeated squaring.
    fn powu(&self, mut n: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while n > 0 {
            if n & 1 == 1 {
                acc *= base.clone();
            }
            n >>= 1;
            if n > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    /// Larger of two values (first one on ties).
    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn powu(&self, n: u32) -> Self {
        self.powi(n as i32)
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn powu(&self, n: u32) -> Self {
        self.powi(n as i32)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

/// Sum of a sequence of scalars.
pub fn sum<'a, T: Scalar>(values: impl IntoIterator<Item = &'a T>) -> T {
    values.into_iter().fold(T::zero(), |mut acc, v| {
        acc += v.clone();
        acc
    })
}

/// Largest absolute entry, zero for an empty slice.
pub fn max_abs<T: Scalar>(values: &[T]) -> T {
    values
        .iter()
        .fold(T::zero(), |acc, v| T::max_of(acc, v.abs()))
}
