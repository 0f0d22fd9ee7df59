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

//! Design parameters, cumulative profile and cross-border geometry.
//!
//! Conventions used throughout the crate:
//!
//! * unit positions are 0-based (`0..N`);
//! * integer boundaries `i` are 1-based (`1..n`), so the cross-border unit
//!   `k_i` straddles the integer `i`;
//! * microstrata are 1-based (`1..=n`), microstratum `U_i` running from
//!   `k_{i-1}` to `k_i` inclusive.

use crate::error::{Error, Result};
use crate::scalar::{complement, CompensatedSum, Scalar};
use std::ops::RangeInclusive;

/// Validated inclusion probabilities with an integer total.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignParams<T> {
    probs: Vec<T>,
    n: usize,
}

/// Checks that every probability lies strictly inside (0, 1) and that they
/// sum to an integer `n >= 1` (exactly for rationals, within `1e-9 * N` for
/// floats).
pub fn validate_params<T: Scalar>(raw_probs: Vec<T>) -> Result<DesignParams<T>> {
    if raw_probs.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    for (unit, p) in raw_probs.iter().enumerate() {
        if *p <= T::zero() || *p >= T::one() {
            return Err(Error::ProbOutOfRange {
                unit,
                value: p.to_f64(),
            });
        }
    }
    let sum = raw_probs
        .iter()
        .cloned()
        .collect::<CompensatedSum<T>>()
        .into_value();
    let nearest = sum.nearest_integer();
    let deviation = (sum.clone() - T::from_usize(nearest as usize)).abs();
    if deviation > T::total_tolerance(raw_probs.len()) {
        return Err(Error::NonIntegerTotal {
            sum: sum.to_f64(),
            nearest,
            deviation: deviation.to_f64(),
        });
    }
    if nearest == 0 {
        return Err(Error::ZeroSampleSize);
    }
    Ok(DesignParams {
        probs: raw_probs,
        n: nearest as usize,
    })
}

impl<T: Scalar> DesignParams<T> {
    /// Parses decimal or `p/q` strings, then validates.
    pub fn from_strs<S: AsRef<str>>(raw: &[S]) -> Result<Self> {
        let probs = raw
            .iter()
            .map(|s| T::parse_str(s.as_ref()))
            .collect::<Result<Vec<T>, _>>()?;
        validate_params(probs)
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn prob(&self, unit: usize) -> &T {
        &self.probs[unit]
    }

    /// Population size `N`.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Fixed sample size `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Parameters of the population reordered as `start, ..., N-1, 0, ...,
    /// start-1`. Position `p` of the result is unit `(start + p) % N`.
    pub fn rotated(&self, start: usize) -> Self {
        let len = self.len();
        let probs = (0..len)
            .map(|p| self.probs[(start + p) % len].clone())
            .collect();
        Self { probs, n: self.n }
    }

    /// Converts every probability, keeping `n`. Meant for changing the
    /// scalar type; `f` must preserve the total.
    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> DesignParams<U> {
        DesignParams {
            probs: self.probs.iter().map(f).collect(),
            n: self.n,
        }
    }

    pub fn into_probs(self) -> Vec<T> {
        self.probs
    }
}

/// Running cumulative sum split into integer and fractional parts.
///
/// Float sums are Kahan-compensated and snapped onto integers they come
/// within [`crate::scalar::FLOAT_SNAP_INTEGER`] of, so that the cross-border
/// classification does not flip on rounding noise.
#[derive(Debug, Clone)]
pub struct RunningProfile<T> {
    sum: CompensatedSum<T>,
    integer: u64,
    fractional: T,
}

impl<T: Scalar> Default for RunningProfile<T> {
    fn default() -> Self {
        Self {
            sum: CompensatedSum::new(),
            integer: 0,
            fractional: T::zero(),
        }
    }
}

impl<T: Scalar> RunningProfile<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, prob: T) {
        self.sum.add(prob);
        let snapped = self.sum.value().clone().snap_integer();
        if &snapped != self.sum.value() {
            self.sum.reset(snapped);
        }
        self.split();
    }

    /// Overrides the running value (used to pin `V_N = n`).
    pub fn pin(&mut self, value: T) {
        self.sum.reset(value);
        self.split();
    }

    fn split(&mut self) {
        let value = self.sum.value();
        self.integer = value.integer_part();
        self.fractional = value.clone() - T::from_usize(self.integer as usize);
    }

    pub fn value(&self) -> &T {
        self.sum.value()
    }

    pub fn integer(&self) -> u64 {
        self.integer
    }

    pub fn fractional(&self) -> &T {
        &self.fractional
    }
}

/// Cumulative sums `V_0 = 0, V_1, ..., V_N` with integer and fractional
/// parts. Index `k` of each vector holds `V_k`, so unit position `p` spans
/// `[V_p, V_{p+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeProfile<T> {
    pub cumulative: Vec<T>,
    pub integer: Vec<u64>,
    pub fractional: Vec<T>,
}

impl<T: Scalar> CumulativeProfile<T> {
    pub fn new(params: &DesignParams<T>) -> Self {
        let len = params.len();
        let mut cumulative = Vec::with_capacity(len + 1);
        let mut integer = Vec::with_capacity(len + 1);
        let mut fractional = Vec::with_capacity(len + 1);
        let mut running = RunningProfile::new();
        cumulative.push(T::zero());
        integer.push(0);
        fractional.push(T::zero());
        for (pos, p) in params.probs().iter().enumerate() {
            running.push(p.clone());
            if pos + 1 == len {
                running.pin(T::from_usize(params.n()));
            }
            cumulative.push(running.value().clone());
            integer.push(running.integer());
            fractional.push(running.fractional().clone());
        }
        Self {
            cumulative,
            integer,
            fractional,
        }
    }
}

/// Position of a unit relative to the microstrata.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitRole {
    /// Cross-border unit `k_i` for the integer boundary `i` (1-based).
    CrossBorder(usize),
    /// Non cross-border unit strictly inside microstratum `U_i` (1-based).
    Interior(usize),
}

impl UnitRole {
    /// Index of the first microstratum the unit belongs to when scanning
    /// forward: `i` for an interior unit of `U_i`, `i + 1` for `k_i`.
    pub fn rank(self) -> usize {
        match self {
            UnitRole::Interior(i) => i,
            UnitRole::CrossBorder(i) => i + 1,
        }
    }
}

/// Design parameters together with their cross-border structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame<T> {
    params: DesignParams<T>,
    profile: CumulativeProfile<T>,
    cross_border: Vec<usize>,
    a: Vec<T>,
    b: Vec<T>,
    microstrata: Vec<RangeInclusive<usize>>,
    roles: Vec<UnitRole>,
}

pub fn build_frame<T: Scalar>(params: DesignParams<T>) -> Frame<T> {
    Frame::new(params)
}

impl<T: Scalar> Frame<T> {
    pub fn new(params: DesignParams<T>) -> Self {
        let profile = CumulativeProfile::new(&params);
        let len = params.len();
        let n = params.n();
        let mut cross_border = Vec::with_capacity(n.saturating_sub(1));
        let mut a = Vec::with_capacity(n.saturating_sub(1));
        let mut b = Vec::with_capacity(n.saturating_sub(1));
        let mut roles = Vec::with_capacity(len);
        for pos in 0..len {
            let prev = &profile.cumulative[pos];
            let cur = &profile.cumulative[pos + 1];
            // Largest integer strictly below V_k.
            let below = if profile.fractional[pos + 1].is_zero() {
                profile.integer[pos + 1].checked_sub(1)
            } else {
                Some(profile.integer[pos + 1])
            };
            let boundary = below.filter(|&i| {
                i >= 1 && (i as usize) < n && T::from_usize(i as usize) >= *prev
            });
            match boundary {
                Some(i) => {
                    let i_val = T::from_usize(i as usize);
                    cross_border.push(pos);
                    a.push(i_val.clone() - prev.clone());
                    b.push(cur.clone() - i_val);
                    roles.push(UnitRole::CrossBorder(i as usize));
                }
                None => roles.push(UnitRole::Interior(cross_border.len() + 1)),
            }
        }
        debug_assert_eq!(cross_border.len(), n - 1);
        let microstrata = (1..=n)
            .map(|i| {
                let start = if i == 1 { 0 } else { cross_border[i - 2] };
                let end = if i == n { len - 1 } else { cross_border[i - 1] };
                start..=end
            })
            .collect();
        Self {
            params,
            profile,
            cross_border,
            a,
            b,
            microstrata,
            roles,
        }
    }

    pub fn params(&self) -> &DesignParams<T> {
        &self.params
    }

    pub fn profile(&self) -> &CumulativeProfile<T> {
        &self.profile
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn prob(&self, unit: usize) -> &T {
        self.params.prob(unit)
    }

    pub fn probs(&self) -> &[T] {
        self.params.probs()
    }

    /// Positions of `k_1, ..., k_{n-1}`.
    pub fn cross_border(&self) -> &[usize] {
        &self.cross_border
    }

    /// Position of `k_i` for `1 <= i < n`.
    pub fn cross_border_unit(&self, i: usize) -> usize {
        self.cross_border[i - 1]
    }

    /// `a_i = i - V_{k_i - 1}` for `1 <= i < n`, with `a_n = 0`.
    pub fn a(&self, i: usize) -> T {
        if i == self.n() {
            T::zero()
        } else {
            self.a[i - 1].clone()
        }
    }

    /// `b_i = V_{k_i} - i` for `1 <= i < n`, with `b_0 = 0`.
    pub fn b(&self, i: usize) -> T {
        if i == 0 {
            T::zero()
        } else {
            self.b[i - 1].clone()
        }
    }

    pub fn a_values(&self) -> &[T] {
        &self.a
    }

    pub fn b_values(&self) -> &[T] {
        &self.b
    }

    /// Microstrata `U_1, ..., U_n` as inclusive position ranges.
    pub fn microstrata(&self) -> &[RangeInclusive<usize>] {
        &self.microstrata
    }

    pub fn role(&self, unit: usize) -> UnitRole {
        self.roles[unit]
    }

    pub fn roles(&self) -> &[UnitRole] {
        &self.roles
    }

    /// `c_i = a_i b_i / ((1 - a_i)(1 - b_i))` for `1 <= i < n`.
    pub fn c_factor(&self, i: usize) -> T {
        let (a, b) = (self.a(i), self.b(i));
        a.clone() * b.clone() / (complement(&a) * complement(&b))
    }

    /// `c(i, j) = c_i c_{i+1} ... c_{j-1}`, equal to 1 when `i == j`.
    pub fn c_product(&self, i: usize, j: usize) -> T {
        (i..j).fold(T::one(), |acc, l| acc * self.c_factor(l))
    }

    /// Frame of the population reordered by the circular permutation that
    /// starts at `start`.
    pub fn rotated(&self, start: usize) -> Self {
        Self::new(self.params.rotated(start))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn exact(values: &[&str]) -> DesignParams<BigRational> {
        DesignParams::from_strs(values).unwrap()
    }

    fn q(s: &str) -> BigRational {
        BigRational::parse_str(s).unwrap()
    }

    #[test]
    fn worked_example_has_size_three() {
        let params = exact(&["0.4", "0.8", "0.5", "0.6", "0.7"]);
        assert_eq!(params.n(), 3);
        assert_eq!(params.len(), 5);
    }

    #[test]
    fn two_halves_has_size_one() {
        assert_eq!(exact(&["0.5", "0.5"]).n(), 1);
        let float = validate_params(vec![0.5, 0.5]).unwrap();
        assert_eq!(float.n(), 1);
    }

    #[test]
    fn non_integer_total_is_rejected() {
        let err = DesignParams::<BigRational>::from_strs(&["0.5", "0.6"]).unwrap_err();
        match err {
            Error::NonIntegerTotal {
                sum,
                nearest,
                deviation,
            } => {
                assert!((sum - 1.1).abs() < 1e-12);
                assert_eq!(nearest, 1);
                assert!((deviation - 0.1).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            validate_params(vec![0.5, 0.6]),
            Err(Error::NonIntegerTotal { nearest: 1, .. })
        ));
    }

    #[test]
    fn out_of_range_probabilities_are_rejected() {
        for bad in [vec![0.0, 1.0], vec![1.0, 0.5, 0.5], vec![-0.5, 0.5, 0.5, 0.5]] {
            assert!(matches!(validate_params(bad), Err(Error::ProbOutOfRange { .. })));
        }
        assert!(matches!(
            validate_params(vec![0.5, 1.0, 0.5]),
            Err(Error::ProbOutOfRange { unit: 1, .. })
        ));
        assert_eq!(validate_params::<f64>(vec![]), Err(Error::EmptyPopulation));
    }

    #[test]
    fn single_unit_cannot_be_valid() {
        assert!(validate_params(vec![0.5]).is_err());
        assert!(DesignParams::<BigRational>::from_strs(&["0.999"]).is_err());
    }

    #[test]
    fn float_tolerance_scales_with_population() {
        let mut probs = vec![0.1; 10];
        probs[0] += 5e-9;
        assert!(validate_params(probs).is_ok());
        let mut probs = vec![0.1; 10];
        probs[0] += 2e-8;
        assert!(validate_params(probs).is_err());
    }

    #[test]
    fn profile_fraction_convention() {
        let params = exact(&["0.5", "0.5", "0.5", "0.5"]);
        let profile = CumulativeProfile::new(&params);
        assert_eq!(profile.integer, vec![0, 0, 1, 1, 2]);
        assert_eq!(profile.fractional[2], q("0"));
        assert_eq!(profile.fractional[3], q("0.5"));
    }

    #[test]
    fn worked_example_geometry() {
        let frame = Frame::new(exact(&["0.4", "0.8", "0.5", "0.6", "0.7"]));
        assert_eq!(frame.cross_border(), &[1, 3]);
        assert_eq!(frame.a_values(), &[q("0.6"), q("0.3")]);
        assert_eq!(frame.b_values(), &[q("0.2"), q("0.3")]);
        assert_eq!(frame.microstrata(), &[0..=1, 1..=3, 3..=4]);
        assert_eq!(frame.c_factor(1), q("0.375"));
        assert_eq!(frame.role(0), UnitRole::Interior(1));
        assert_eq!(frame.role(1), UnitRole::CrossBorder(1));
        assert_eq!(frame.role(2), UnitRole::Interior(2));
        assert_eq!(frame.role(4), UnitRole::Interior(3));
    }

    #[test]
    fn eight_unit_frame_geometry() {
        let frame = Frame::new(exact(&["0.2", "0.4", "0.7", "0.4", "0.6", "0.6", "0.3", "0.8"]));
        assert_eq!(frame.n(), 4);
        assert_eq!(frame.cross_border(), &[2, 4, 6]);
        assert_eq!(frame.a_values(), &[q("0.4"), q("0.3"), q("0.1")]);
        assert_eq!(frame.b_values(), &[q("0.3"), q("0.3"), q("0.2")]);
        let float = Frame::new(
            validate_params(vec![0.2, 0.4, 0.7, 0.4, 0.6, 0.6, 0.3, 0.8]).unwrap(),
        );
        assert_eq!(float.cross_border(), frame.cross_border());
    }

    #[test]
    fn size_one_frame_has_single_microstratum() {
        let frame = Frame::new(exact(&["0.5", "0.5"]));
        assert!(frame.cross_border().is_empty());
        assert_eq!(frame.microstrata(), &[0..=1]);
        assert_eq!(frame.b(0), q("0"));
        assert_eq!(frame.a(1), q("0"));
    }

    #[test]
    fn integer_landing_makes_next_unit_cross_border_with_zero_a() {
        // V_2 = 1 exactly: unit 2 is not cross-border, unit 3 is with a_1 = 0.
        let frame = Frame::new(exact(&["0.5", "0.5", "0.5", "0.5"]));
        assert_eq!(frame.cross_border(), &[2]);
        assert_eq!(frame.a(1), q("0"));
        assert_eq!(frame.b(1), q("0.5"));
        assert_eq!(frame.role(1), UnitRole::Interior(1));
        assert_eq!(frame.c_factor(1), q("0"));
    }

    #[test]
    fn rotation_reorders_units() {
        let params = exact(&["0.2", "0.4", "0.7", "0.4", "0.6", "0.6", "0.3", "0.8"]);
        let rotated = params.rotated(2);
        assert_eq!(rotated.prob(0), &q("0.7"));
        assert_eq!(rotated.prob(6), &q("0.2"));
        assert_eq!(rotated.n(), 4);
    }

    #[test]
    fn float_frame_pins_final_total() {
        let probs = vec![0.1; 30];
        let frame = Frame::new(validate_params(probs).unwrap());
        assert_eq!(frame.profile().cumulative[30], 3.0);
        assert_eq!(frame.cross_border().len(), 2);
    }
}
