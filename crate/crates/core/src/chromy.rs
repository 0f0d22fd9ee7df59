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

//! Chromy's strictly sequential sampling and its randomized variant.
//!
//! Every sampler here consumes exactly one uniform draw per unit, in scan
//! order; the randomized variant draws one extra uniform beforehand to pick
//! the starting unit. A `(seed, population)` pair therefore fixes the
//! sample.

use crate::error::{Error, Result};
use crate::frame::{Frame, RunningProfile};
use crate::scalar::{complement, Scalar};
use rand::Rng;

/// A fixed-size sample.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Sample {
    /// Sorted 0-based positions of the selected units in the original order.
    pub selected: Vec<usize>,
    /// Starting unit of the circular permutation, for randomized designs.
    pub permutation_start: Option<usize>,
    /// Seed of the generator that produced the sample, when known.
    pub seed: Option<u64>,
}

impl Sample {
    pub fn new(mut selected: Vec<usize>) -> Self {
        selected.sort_unstable();
        Self {
            selected,
            permutation_start: None,
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn contains(&self, unit: usize) -> bool {
        self.selected.binary_search(&unit).is_ok()
    }
}

/// Conditional probability that unit `unit` is selected, given the running
/// count of selections before it and the integer/fractional parts of
/// `V_{k-1}` and `V_k`.
pub fn selection_probability<T: Scalar>(
    unit: usize,
    count: u64,
    prev_integer: u64,
    prev_fractional: &T,
    fractional: &T,
) -> Result<T> {
    let violation = || Error::InvariantViolation {
        unit,
        count,
        lower: prev_integer,
        upper: prev_integer + 1,
    };
    let behind = count == prev_integer;
    let ahead = count == prev_integer + 1;
    if !behind && !ahead {
        return Err(violation());
    }
    if fractional > prev_fractional {
        // Non cross-border unit.
        if behind {
            Ok((fractional.clone() - prev_fractional.clone()) / complement(prev_fractional))
        } else {
            Ok(T::zero())
        }
    } else if behind {
        Ok(T::one())
    } else if prev_fractional.is_zero() {
        // Only reachable with an integer probability.
        Err(violation())
    } else {
        Ok(fractional.clone() / prev_fractional.clone())
    }
}

/// Bernoulli trial with probability `p`, consuming one uniform.
pub(crate) fn bernoulli<T: Scalar, R: Rng + ?Sized>(p: &T, rng: &mut R) -> bool {
    let u: f64 = rng.random();
    u < p.to_f64()
}

/// State of a sequential pass: only the running count and the parts of the
/// previous cumulative sum are kept, so memory does not depend on `N`.
#[derive(Debug, Clone)]
pub struct ChromyState<T> {
    unit: usize,
    count: u64,
    profile: RunningProfile<T>,
}

impl<T: Scalar> Default for ChromyState<T> {
    fn default() -> Self {
        Self {
            unit: 0,
            count: 0,
            profile: RunningProfile::new(),
        }
    }
}

impl<T: Scalar> ChromyState<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Units processed so far.
    pub fn units_seen(&self) -> usize {
        self.unit
    }

    /// Selections so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn cumulative(&self) -> &T {
        self.profile.value()
    }

    /// Processes the next unit; the uniform `u` decides the draw.
    pub fn step(&mut self, prob: T, u: f64) -> Result<bool> {
        let prev_integer = self.profile.integer();
        let prev_fractional = self.profile.fractional().clone();
        self.profile.push(prob);
        self.advance(prev_integer, &prev_fractional, u)
    }

    fn advance(&mut self, prev_integer: u64, prev_fractional: &T, u: f64) -> Result<bool> {
        let p = selection_probability(
            self.unit,
            self.count,
            prev_integer,
            prev_fractional,
            self.profile.fractional(),
        )?;
        let selected = u < p.to_f64();
        self.count += u64::from(selected);
        let integer = self.profile.integer();
        if self.count < integer || self.count > integer + 1 {
            return Err(Error::InvariantViolation {
                unit: self.unit,
                count: self.count,
                lower: integer,
                upper: integer + 1,
            });
        }
        self.unit += 1;
        Ok(selected)
    }
}

/// Chromy sampling on a materialized frame.
pub fn chromy_sample<T: Scalar, R: Rng + ?Sized>(frame: &Frame<T>, rng: &mut R) -> Result<Sample> {
    let profile = frame.profile();
    let mut selected = Vec::with_capacity(frame.n());
    let mut count = 0u64;
    for unit in 0..frame.len() {
        let p = selection_probability(
            unit,
            count,
            profile.integer[unit],
            &profile.fractional[unit],
            &profile.fractional[unit + 1],
        )?;
        if bernoulli(&p, rng) {
            selected.push(unit);
            count += 1;
        }
        let integer = profile.integer[unit + 1];
        if count < integer || count > integer + 1 {
            return Err(Error::InvariantViolation {
                unit,
                count,
                lower: integer,
                upper: integer + 1,
            });
        }
    }
    if selected.len() != frame.n() {
        return Err(Error::InvariantViolation {
            unit: frame.len(),
            count,
            lower: frame.n() as u64,
            upper: frame.n() as u64,
        });
    }
    Ok(Sample::new(selected))
}

/// Streaming Chromy sampler over `(id, probability)` pairs.
///
/// Yields the ids of selected units as the scan reaches them. The population
/// is never materialized.
pub struct ChromySelect<I, R, T> {
    units: I,
    rng: R,
    state: ChromyState<T>,
    failed: bool,
}

pub fn chromy_select<Id, T, I, R>(units: I, rng: R) -> ChromySelect<I::IntoIter, R, T>
where
    T: Scalar,
    I: IntoIterator<Item = (Id, T)>,
    R: Rng,
{
    ChromySelect {
        units: units.into_iter(),
        rng,
        state: ChromyState::new(),
        failed: false,
    }
}

impl<I, R, T> ChromySelect<I, R, T> {
    pub fn state(&self) -> &ChromyState<T> {
        &self.state
    }
}

impl<Id, T, I, R> Iterator for ChromySelect<I, R, T>
where
    T: Scalar,
    I: Iterator<Item = (Id, T)>,
    R: Rng,
{
    type Item = Result<Id>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        for (id, prob) in self.units.by_ref() {
            let u: f64 = self.rng.random();
            match self.state.step(prob, u) {
                Ok(true) => return Some(Ok(id)),
                Ok(false) => {}
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
        }
        None
    }
}

/// Draws the start of the circular permutation: unit `k` with probability
/// `pi_k / n`. Consumes one uniform.
pub fn draw_start<T: Scalar, R: Rng + ?Sized>(frame: &Frame<T>, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let target = u * frame.n() as f64;
    let cumulative = &frame.profile().cumulative;
    // First unit whose interval [V_k, V_{k+1}) contains the target.
    let pos = cumulative[1..].partition_point(|v| v.to_f64() <= target);
    pos.min(frame.len() - 1)
}

/// Randomized Chromy sampling: a random circular rotation followed by
/// Chromy sampling on the rotated frame.
pub fn randomized_chromy_sample<T: Scalar, R: Rng + ?Sized>(
    frame: &Frame<T>,
    rng: &mut R,
) -> Result<Sample> {
    let start = draw_start(frame, rng);
    let rotated = frame.rotated(start);
    let inner = chromy_sample(&rotated, rng)?;
    let len = frame.len();
    let mut sample = Sample::new(inner.selected.iter().map(|&p| (p + start) % len).collect());
    sample.permutation_start = Some(start);
    Ok(sample)
}
