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

use crate::scalar::ParseScalarError;
use thiserror::Error;

/// Errors raised by the sampling designs and estimators.
///
/// Unit positions in error payloads are 0-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty population")]
    EmptyPopulation,
    #[error("probability of unit {unit} is {value}, outside (0, 1)")]
    ProbOutOfRange { unit: usize, value: f64 },
    #[error("probabilities sum to {sum}, which is {deviation} away from the nearest integer {nearest}")]
    NonIntegerTotal {
        sum: f64,
        nearest: u64,
        deviation: f64,
    },
    #[error("probabilities sum to zero, so the expected sample size is below 1")]
    ZeroSampleSize,
    #[error("running count {count} at unit {unit} outside [{lower}, {upper}]")]
    InvariantViolation {
        unit: usize,
        count: u64,
        lower: u64,
        upper: u64,
    },
    #[error("pivotal sampling did not terminate within {steps} duels")]
    NonTermination { steps: usize },
    #[error("degenerate denominator at cross-border unit {boundary}")]
    DegenerateDenominator { boundary: usize },
    #[error("population of {size} units exceeds the enumeration cap of {cap}")]
    PopulationTooLarge { size: usize, cap: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("unit {unit} is outside the population of {size} units")]
    UnitOutOfRange { unit: usize, size: usize },
    #[error("joint inclusion probability of units {first} and {second} is zero")]
    ZeroJointProbability { first: usize, second: usize },
    #[error("true variance is zero")]
    ZeroTrueVariance,
    #[error("no replicates")]
    NoReplicates,
    #[error("all size values are equal, cannot rescale")]
    DegenerateX,
    #[error("sample size {n} exceeds the population size {size}")]
    InfeasibleSize { n: usize, size: usize },
    #[error("size measure of unit {unit} is {value}, expected a positive value")]
    NonPositiveSize { unit: usize, value: f64 },
    #[error("number of draws must be at least 1")]
    ZeroDraws,
    #[error(transparent)]
    Parse(#[from] ParseScalarError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
