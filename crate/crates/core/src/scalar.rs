// Copyright 2026 The chromy-sampling Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Arithmetic abstraction shared by every sampler and estimator.
//!
//! Two implementations are provided: [`f64`] for production-size populations
//! and [`BigRational`] for exact enumeration and golden fixtures. All design
//! code is written once against [`Scalar`].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};
use std::fmt::{Debug, Display};
use std::str::FromStr;
use thiserror::Error;

/// Absolute distance under which a float cumulative sum is snapped onto the
/// nearest integer.
pub const FLOAT_SNAP_INTEGER: f64 = 1e-9;

/// Distance under which a float pivotal residual is snapped onto 0 or 1.
pub const FLOAT_SNAP_UNIT: f64 = 1e-12;

/// Relative tolerance (per unit) on the integer total of a float design.
pub const FLOAT_TOTAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse {input:?} as a number")]
pub struct ParseScalarError {
    pub input: String,
}

impl ParseScalarError {
    fn new(input: &str) -> Self {
        Self {
            input: input.to_owned(),
        }
    }
}

/// Which arithmetic a run uses. Mostly useful at the I/O boundary, where the
/// choice is made at runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArithmeticMode {
    Float64,
    ExactRational,
}

/// Number type the sampling designs are generic over.
pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + Send + Sync + 'static
{
    /// Whether arithmetic is exact. Exact types never snap and use zero
    /// tolerances.
    const EXACT: bool;

    fn mode() -> ArithmeticMode {
        if Self::EXACT {
            ArithmeticMode::ExactRational
        } else {
            ArithmeticMode::Float64
        }
    }

    fn from_usize(v: usize) -> Self;

    fn from_ratio(num: u64, den: u64) -> Self;

    /// Parses decimal (`0.125`, `-3`, `1e-3`) or fraction (`3/8`) notation.
    /// Exact types keep the decimal string's value verbatim.
    fn parse_str(s: &str) -> Result<Self, ParseScalarError>;

    fn to_f64(&self) -> f64;

    /// Largest integer not above `self`; `self` must be nonnegative.
    fn integer_part(&self) -> u64;

    /// Nearest integer, rounding half away from zero; `self` must be
    /// nonnegative.
    fn nearest_integer(&self) -> u64;

    /// Snaps a float that lies within [`FLOAT_SNAP_INTEGER`] of an integer
    /// onto it. Identity for exact types.
    fn snap_integer(self) -> Self;

    /// Snaps a float that lies within [`FLOAT_SNAP_UNIT`] of 0 or 1 onto it.
    /// Identity for exact types.
    fn snap_unit(self) -> Self;

    /// Tolerance on `|sum - round(sum)|` for a design of `len` units.
    fn total_tolerance(len: usize) -> Self;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_usize(v: usize) -> Self {
        v as f64
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn parse_str(s: &str) -> Result<Self, ParseScalarError> {
        let t = s.trim();
        if let Some((num, den)) = t.split_once('/') {
            let num: f64 = num.trim().parse().map_err(|_| ParseScalarError::new(s))?;
            let den: f64 = den.trim().parse().map_err(|_| ParseScalarError::new(s))?;
            if den == 0.0 {
                return Err(ParseScalarError::new(s));
            }
            return Ok(num / den);
        }
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(ParseScalarError::new(s)),
        }
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn integer_part(&self) -> u64 {
        self.floor() as u64
    }

    fn nearest_integer(&self) -> u64 {
        self.round() as u64
    }

    fn snap_integer(self) -> Self {
        let r = self.round();
        if (self - r).abs() <= FLOAT_SNAP_INTEGER {
            r
        } else {
            self
        }
    }

    fn snap_unit(self) -> Self {
        if self.abs() <= FLOAT_SNAP_UNIT {
            0.0
        } else if (self - 1.0).abs() <= FLOAT_SNAP_UNIT {
            1.0
        } else {
            self
        }
    }

    fn total_tolerance(len: usize) -> Self {
        FLOAT_TOTAL_TOLERANCE * len as f64
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_usize(v: usize) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn parse_str(s: &str) -> Result<Self, ParseScalarError> {
        parse_exact(s.trim()).ok_or_else(|| ParseScalarError::new(s))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn integer_part(&self) -> u64 {
        self.floor().to_integer().to_u64().unwrap_or(0)
    }

    fn nearest_integer(&self) -> u64 {
        self.round().to_integer().to_u64().unwrap_or(0)
    }

    fn snap_integer(self) -> Self {
        self
    }

    fn snap_unit(self) -> Self {
        self
    }

    fn total_tolerance(_len: usize) -> Self {
        BigRational::zero()
    }
}

fn parse_exact(s: &str) -> Option<BigRational> {
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_exact(num.trim())?;
        let den = parse_exact(den.trim())?;
        if den.is_zero() {
            return None;
        }
        return Some(num / den);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], i32::from_str(&s[pos + 1..]).ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_digits, frac_digits) = digits.split_once('.').unwrap_or((digits, ""));
    if int_digits.is_empty() && frac_digits.is_empty() {
        return None;
    }
    if !int_digits
        .bytes()
        .chain(frac_digits.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let all_digits = format!("{int_digits}{frac_digits}");
    let mut value = BigRational::from_integer(BigInt::from_str_radix(&all_digits, 10).ok()?);
    let scale = exponent - frac_digits.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let factor = num_traits::pow(ten, scale.unsigned_abs() as usize);
    if scale >= 0 {
        value *= factor;
    } else {
        value /= factor;
    }
    Some(if negative { -value } else { value })
}

/// Kahan-compensated running sum. With exact arithmetic the compensation term
/// stays identically zero, so the same accumulator serves both modes.
#[derive(Debug, Clone)]
pub struct CompensatedSum<T> {
    sum: T,
    compensation: T,
}

impl<T: Scalar> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: T) {
        let y = value - self.compensation.clone();
        let t = self.sum.clone() + y.clone();
        self.compensation = (t.clone() - self.sum.clone()) - y;
        self.sum = t;
    }

    /// Replaces the running value and clears the compensation term.
    pub fn reset(&mut self, value: T) {
        self.sum = value;
        self.compensation = T::zero();
    }

    pub fn value(&self) -> &T {
        &self.sum
    }

    pub fn into_value(self) -> T {
        self.sum
    }
}

impl<T: Scalar> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// `1 - x`, spelled once.
pub(crate) fn complement<T: Scalar>(x: &T) -> T {
    T::one() - x.clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn exact_parse_keeps_decimal_value() {
        assert_eq!(BigRational::parse_str("0.4").unwrap(), q(2, 5));
        assert_eq!(BigRational::parse_str("-1.25").unwrap(), q(-5, 4));
        assert_eq!(BigRational::parse_str("3/56").unwrap(), q(3, 56));
        assert_eq!(BigRational::parse_str("2.5e-1").unwrap(), q(1, 4));
        assert_eq!(BigRational::parse_str("12").unwrap(), q(12, 1));
        assert_eq!(BigRational::parse_str(".5").unwrap(), q(1, 2));
        assert!(BigRational::parse_str("abc").is_err());
        assert!(BigRational::parse_str("1/0").is_err());
        assert!(BigRational::parse_str("").is_err());
        assert!(BigRational::parse_str("-").is_err());
    }

    #[test]
    fn float_parse_accepts_fractions() {
        assert_eq!(f64::parse_str("3/8").unwrap(), 0.375);
        assert_eq!(f64::parse_str(" 0.25 ").unwrap(), 0.25);
        assert!(f64::parse_str("nan").is_err());
    }

    #[test]
    fn integer_and_fractional_parts() {
        assert_eq!(q(18, 5).integer_part(), 3);
        assert_eq!(q(4, 1).integer_part(), 4);
        assert_eq!(3.6f64.integer_part(), 3);
        assert_eq!(q(7, 2).nearest_integer(), 4);
    }

    #[test]
    fn snapping_only_affects_floats() {
        assert_eq!((3.0 - 1e-12f64).snap_integer(), 3.0);
        assert_eq!(3.001f64.snap_integer(), 3.001);
        assert_eq!((1.0 - 1e-14f64).snap_unit(), 1.0);
        assert_eq!(q(999_999_999_999, 1_000_000_000_000).snap_unit(), q(999_999_999_999, 1_000_000_000_000));
    }

    #[test]
    fn compensated_sum_beats_naive_sum() {
        let values = vec![0.1f64; 1_000_000];
        let naive: f64 = values.iter().sum();
        let kahan = values.iter().copied().collect::<CompensatedSum<f64>>().into_value();
        assert!((kahan - 100_000.0).abs() < (naive - 100_000.0).abs());
        assert!((kahan - 100_000.0).abs() < 1e-9);
    }
}
