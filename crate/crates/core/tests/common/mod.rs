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


//! Random populations shared by the integration tests.

#![allow(dead_code)]

use chromy_core::{validate_params, Exact, ExactParams, FloatParams, Scalar};
use num_bigint::BigInt;
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn q(s: &str) -> Exact {
    Exact::parse_str(s).unwrap()
}

pub fn worked_example() -> ExactParams {
    ExactParams::from_strs(&["0.4", "0.8", "0.5", "0.6", "0.7"]).unwrap()
}

pub fn eight_unit_example() -> ExactParams {
    ExactParams::from_strs(&["0.2", "0.4", "0.7", "0.4", "0.6", "0.6", "0.3", "0.8"]).unwrap()
}

/// `len` integers in `[1, den - 1]` summing to `total`, where
/// `len <= total <= len * (den - 1)` (otherwise this never returns).
pub fn numerators<R: Rng>(rng: &mut R, len: usize, den: u64, total: u64) -> Vec<u64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    let scale = total as f64 / raw.iter().sum::<f64>();
    let mut num: Vec<u64> = raw
        .iter()
        .map(|w| ((w * scale).round() as u64).clamp(1, den - 1))
        .collect();
    let mut sum: u64 = num.iter().sum();
    while sum != total {
        let k = rng.random_range(0..len);
        if sum < total && num[k] < den - 1 {
            let step = (total - sum).min(den - 1 - num[k]).min(1 + rng.random_range(0..den / 4 + 1));
            num[k] += step;
            sum += step;
        } else if sum > total && num[k] > 1 {
            let step = (sum - total).min(num[k] - 1).min(1 + rng.random_range(0..den / 4 + 1));
            num[k] -= step;
            sum -= step;
        }
    }
    num
}

/// Rational population with `3 <= N <= max_len` and a common denominator
/// drawn from a small set. Denominator 10 makes integer landings of the
/// cumulative sums frequent.
pub fn random_rational_params<R: Rng>(rng: &mut R, max_len: usize) -> ExactParams {
    let len = rng.random_range(3..=max_len);
    let den = *[10u64, 10, 12, 15, 20, 24, 35, 97].choose(rng).unwrap();
    let n = rng.random_range(1..len) as u64;
    let probs = numerators(rng, len, den, n * den)
        .into_iter()
        .map(|a| Exact::new(BigInt::from(a), BigInt::from(den)))
        .collect();
    validate_params(probs).unwrap()
}

/// The worked example followed by `count` random populations.
pub fn battery<R: Rng>(rng: &mut R, count: usize, max_len: usize) -> Vec<ExactParams> {
    let mut out = vec![worked_example()];
    out.extend((0..count).map(|_| random_rational_params(rng, max_len)));
    out
}

pub const DYADIC_DEN: u64 = 1 << 20;

/// Float population whose probabilities are multiples of `2^-20`, so every
/// cumulative sum is exact in `f64`. Returns the numerators too.
pub fn dyadic_params<R: Rng>(rng: &mut R, len: usize) -> (Vec<u64>, FloatParams) {
    let n = rng.random_range(1..len) as u64;
    let num = numerators(rng, len, DYADIC_DEN, n * DYADIC_DEN);
    let probs = num.iter().map(|&a| a as f64 / DYADIC_DEN as f64).collect();
    (num, validate_params(probs).unwrap())
}

pub fn random_values<R: Rng>(rng: &mut R, len: usize) -> Vec<Exact> {
    (0..len)
        .map(|_| Exact::new(BigInt::from(rng.random_range(-20i64..=60)), BigInt::from(rng.random_range(1i64..=7))))
        .collect()
}
