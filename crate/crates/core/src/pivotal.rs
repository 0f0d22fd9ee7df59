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

//! Ordered pivotal sampling: a sequence of duels between the two first
//! units whose residual probability is neither 0 nor 1.

use crate::chromy::Sample;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::scalar::{complement, Scalar};
use rand::Rng;

/// One possible outcome of a duel: with probability `prob` the pair of
/// residuals becomes `(first, second)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DuelOutcome<T> {
    pub prob: T,
    pub first: T,
    pub second: T,
}

/// The two outcomes of a duel between residuals `pk` (smaller index) and
/// `pl`. A pair summing to exactly 1 goes through the rejection branch.
pub fn duel_outcomes<T: Scalar>(pk: &T, pl: &T) -> [DuelOutcome<T>; 2] {
    let sum = pk.clone() + pl.clone();
    if sum <= T::one() {
        let p = pk.clone() / sum.clone();
        [
            DuelOutcome {
                prob: p.clone(),
                first: sum.clone().snap_unit(),
                second: T::zero(),
            },
            DuelOutcome {
                prob: complement(&p),
                first: T::zero(),
                second: sum.snap_unit(),
            },
        ]
    } else {
        let p = complement(pl) / (T::from_usize(2) - sum.clone());
        let residual = (sum - T::one()).snap_unit();
        [
            DuelOutcome {
                prob: p.clone(),
                first: T::one(),
                second: residual.clone(),
            },
            DuelOutcome {
                prob: complement(&p),
                first: residual,
                second: T::one(),
            },
        ]
    }
}

pub(crate) fn is_resolved<T: Scalar>(v: &T) -> bool {
    v.is_zero() || v.is_one()
}

/// Residual probabilities during a pivotal pass.
///
/// Because duels always involve the two first active units, the active set
/// is at most one carried unit followed by the unscanned tail.
#[derive(Debug, Clone)]
pub struct PivotalState<T> {
    residual: Vec<T>,
    carrier: Option<usize>,
    cursor: usize,
    steps: usize,
}

impl<T: Scalar> PivotalState<T> {
    pub fn new(probs: &[T]) -> Self {
        Self {
            residual: probs.to_vec(),
            carrier: None,
            cursor: 0,
            steps: 0,
        }
    }

    pub fn residual(&self) -> &[T] {
        &self.residual
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// The next pair of units to duel, if two active units remain.
    pub fn next_pair(&mut self) -> Option<(usize, usize)> {
        let len = self.residual.len();
        while self.cursor < len && is_resolved(&self.residual[self.cursor]) {
            self.cursor += 1;
        }
        let first = match self.carrier {
            Some(c) => c,
            None => {
                let c = self.cursor;
                self.cursor += 1;
                while self.cursor < len && is_resolved(&self.residual[self.cursor]) {
                    self.cursor += 1;
                }
                c
            }
        };
        if first >= len || self.cursor >= len {
            self.carrier = (first < len && !is_resolved(&self.residual[first])).then_some(first);
            return None;
        }
        let second = self.cursor;
        self.cursor += 1;
        Some((first, second))
    }

    /// Applies a duel outcome to the pair returned by [`Self::next_pair`].
    pub fn apply(&mut self, pair: (usize, usize), outcome: &DuelOutcome<T>) {
        let (k, l) = pair;
        self.residual[k] = outcome.first.clone();
        self.residual[l] = outcome.second.clone();
        self.carrier = if !is_resolved(&self.residual[k]) {
            Some(k)
        } else if !is_resolved(&self.residual[l]) {
            Some(l)
        } else {
            None
        };
        self.steps += 1;
    }

    /// Whether every residual is 0 or 1.
    pub fn is_terminal(&self) -> bool {
        self.residual.iter().all(is_resolved)
    }
}

/// Ordered pivotal sampling; one uniform per duel.
pub fn pivotal_sample<T: Scalar, R: Rng + ?Sized>(frame: &Frame<T>, rng: &mut R) -> Result<Sample> {
    let max_steps = frame.len().saturating_sub(1);
    let mut state = PivotalState::new(frame.probs());
    while let Some(pair) = state.next_pair() {
        if state.steps() >= max_steps {
            return Err(Error::NonTermination { steps: state.steps() });
        }
        let [win, lose] = duel_outcomes(&state.residual[pair.0], &state.residual[pair.1]);
        let u: f64 = rng.random();
        let outcome = if u < win.prob.to_f64() { win } else { lose };
        state.apply(pair, &outcome);
    }
    if !state.is_terminal() {
        return Err(Error::NonTermination { steps: state.steps() });
    }
    let selected: Vec<usize> = state
        .residual
        .iter()
        .enumerate()
        .filter_map(|(k, v)| v.is_one().then_some(k))
        .collect();
    Ok(Sample::new(selected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::validate_params;
    use crate::DesignParams;
    use num_rational::BigRational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(s: &str) -> BigRational {
        BigRational::parse_str(s).unwrap()
    }

    #[test]
    fn first_duel_of_worked_example_is_a_selection_step() {
        let [win, lose] = duel_outcomes(&q("0.4"), &q("0.8"));
        assert_eq!(win.prob, q("1/4"));
        assert_eq!((win.first, win.second), (q("1"), q("0.2")));
        assert_eq!(lose.prob, q("3/4"));
        assert_eq!((lose.first, lose.second), (q("0.2"), q("1")));
    }

    #[test]
    fn rejection_step_absorbs_mass() {
        let [keep, pass] = duel_outcomes(&q("0.2"), &q("0.5"));
        assert_eq!(keep.prob, q("2/7"));
        assert_eq!((keep.first, keep.second), (q("0.7"), q("0")));
        assert_eq!(pass.prob, q("5/7"));
        assert_eq!((pass.first, pass.second), (q("0"), q("0.7")));
    }

    #[test]
    fn pair_summing_to_one_takes_rejection_branch() {
        let [a, b] = duel_outcomes(&q("0.5"), &q("0.5"));
        assert_eq!(a.prob, q("1/2"));
        assert_eq!((a.first, a.second), (q("1"), q("0")));
        assert_eq!((b.first, b.second), (q("0"), q("1")));
    }

    #[test]
    fn two_halves_select_each_unit_half_the_time() {
        let frame = Frame::new(validate_params(vec![0.5, 0.5]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 100_000;
        let mut first = 0;
        for _ in 0..draws {
            let s = pivotal_sample(&frame, &mut rng).unwrap();
            assert_eq!(s.len(), 1);
            first += usize::from(s.contains(0));
        }
        let share = first as f64 / draws as f64;
        assert!((share - 0.5).abs() < 4.0 * (0.25f64 / draws as f64).sqrt());
    }

    #[test]
    fn residual_mass_is_conserved_exactly() {
        let params = DesignParams::<BigRational>::from_strs(&["0.2", "0.4", "0.7", "0.4", "0.6", "0.6", "0.3", "0.8"])
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let mut state = PivotalState::new(params.probs());
            while let Some(pair) = state.next_pair() {
                let before: Vec<BigRational> = state.residual().to_vec();
                let [win, lose] = duel_outcomes(&state.residual()[pair.0], &state.residual()[pair.1]);
                let outcome = if rng.random::<f64>() < win.prob.to_f64() { win } else { lose };
                state.apply(pair, &outcome);
                let total: BigRational = state.residual().iter().cloned().sum();
                assert_eq!(total, q("4"));
                let changed = before.iter().zip(state.residual()).filter(|(x, y)| x != y).count();
                assert!(changed <= 2);
            }
            assert!(state.is_terminal());
            assert!(state.steps() <= 7);
        }
    }

    #[test]
    fn float_pivotal_snaps_and_terminates() {
        let probs: Vec<f64> = (0..30).map(|_| 0.1).collect();
        let frame = Frame::new(validate_params(probs).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            assert_eq!(pivotal_sample(&frame, &mut rng).unwrap().len(), 3);
        }
    }
}
