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

//! Second-order inclusion probabilities.
//!
//! For Chromy sampling the joint probability of two units depends only on
//! their roles (interior or cross-border) and on the product
//! `c(i, j) = c_i ... c_{j-1}` of the boundary factors
//! `c_l = a_l b_l / ((1 - a_l)(1 - b_l))` between their microstrata.
//! Randomized Chromy averages these closed forms over the `N` circular
//! permutations, weighting the one starting at unit `i` by `pi_i / n`.

use crate::chromy::randomized_chromy_sample;
use crate::error::{Error, Result};
use crate::frame::{DesignParams, Frame, UnitRole};
use crate::scalar::{complement, Scalar};
use crate::seeding::{streams, substream};
use rayon::prelude::*;

/// How a matrix was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    /// Closed form for plain Chromy sampling.
    ClosedForm,
    /// Closed form averaged over circular permutations (randomized Chromy).
    PermutationAveraged,
    /// Exact enumeration of a sampler's design.
    Enumerated,
    /// Read from a file without recomputation.
    Imported,
    /// Empirical pair frequencies over randomized Chromy draws.
    MonteCarlo { draws: u64, seed: u64 },
}

/// Dense symmetric `N x N` matrix of joint inclusion probabilities, with the
/// first-order probabilities on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct JointProbabilityMatrix<T> {
    size: usize,
    values: Vec<T>,
    provenance: Provenance,
}

impl<T: Scalar> JointProbabilityMatrix<T> {
    /// Builds a matrix from row-major values.
    pub fn from_values(size: usize, values: Vec<T>, provenance: Provenance) -> Result<Self> {
        if values.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                actual: values.len(),
            });
        }
        Ok(Self {
            size,
            values,
            provenance,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn get(&self, k: usize, l: usize) -> &T {
        &self.values[k * self.size + l]
    }

    pub fn row(&self, k: usize) -> &[T] {
        &self.values[k * self.size..(k + 1) * self.size]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// First-order probabilities (the diagonal).
    pub fn first_order(&self) -> Vec<T> {
        (0..self.size).map(|k| self.get(k, k).clone()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size).all(|k| (k + 1..self.size).all(|l| self.get(k, l) == self.get(l, k)))
    }

    /// Largest `|sum_{l != k} pi_kl - (n - 1) pi_k|` over rows.
    pub fn row_sum_deviation(&self, n: usize) -> T {
        let n_minus_one = T::from_usize(n - 1);
        (0..self.size)
            .map(|k| {
                let off: T = (0..self.size)
                    .filter(|&l| l != k)
                    .fold(T::zero(), |acc, l| acc + self.get(k, l).clone());
                (off - n_minus_one.clone() * self.get(k, k).clone()).abs()
            })
            .fold(T::zero(), |acc, d| if d > acc { d } else { acc })
    }

    /// Pairs violating `pi_kl <= pi_k pi_l`. Float entries may exceed the
    /// bound by a relative `1e-9` of rounding noise.
    pub fn syg_violations(&self) -> Vec<(usize, usize)> {
        let slack = T::one() + T::total_tolerance(1);
        let mut out = Vec::new();
        for k in 0..self.size {
            for l in k + 1..self.size {
                let bound = self.get(k, k).clone() * self.get(l, l).clone() * slack.clone();
                if *self.get(k, l) > bound {
                    out.push((k, l));
                }
            }
        }
        out
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> JointProbabilityMatrix<U> {
        JointProbabilityMatrix {
            size: self.size,
            values: self.values.iter().map(f).collect(),
            provenance: self.provenance,
        }
    }
}

/// Joint inclusion probability of units `k != l` under Chromy sampling,
/// dispatched on the roles of the two units.
pub fn second_order_chromy<T: Scalar>(frame: &Frame<T>, k: usize, l: usize) -> Result<T> {
    let size = frame.len();
    for unit in [k, l] {
        if unit >= size {
            return Err(Error::UnitOutOfRange { unit, size });
        }
    }
    if k == l {
        return Ok(frame.prob(k).clone());
    }
    let (k, l) = if k < l { (k, l) } else { (l, k) };
    let (pk, pl) = (frame.prob(k).clone(), frame.prob(l).clone());
    let both = pk.clone() * pl.clone();
    let value = match (frame.role(k), frame.role(l)) {
        (UnitRole::Interior(i), UnitRole::Interior(j)) => {
            if i == j {
                T::zero()
            } else {
                both * complement(&frame.c_product(i, j))
            }
        }
        // k = k_{i-1}, l interior to U_j with i <= j.
        (UnitRole::CrossBorder(i1), UnitRole::Interior(j)) => {
            let i = i1 + 1;
            let b = frame.b(i - 1);
            let term = b.clone() * complement(&pk) / (pk.clone() * complement(&b));
            both * complement(&(term * frame.c_product(i, j)))
        }
        // l = k_{j-1}, k interior to U_i with i < j.
        (UnitRole::Interior(i), UnitRole::CrossBorder(j1)) => {
            let j = j1 + 1;
            let b = frame.b(j - 1);
            let term = complement(&pl) * complement(&b) / (pl.clone() * b);
            both * complement(&(term * frame.c_product(i, j)))
        }
        // k = k_{i-1}, l = k_{j-1}, i < j.
        (UnitRole::CrossBorder(i1), UnitRole::CrossBorder(j1)) => {
            let (i, j) = (i1 + 1, j1 + 1);
            let (bi, bj) = (frame.b(i - 1), frame.b(j - 1));
            let term = bi.clone() * complement(&bj) * complement(&pk) * complement(&pl)
                / (both.clone() * bj * complement(&bi));
            both * complement(&(term * frame.c_product(i, j)))
        }
    };
    Ok(value)
}

/// Per-frame quantities for computing whole rows of the Chromy matrix in
/// `O(N)` each. Each unit carries a factor for when it is the left member
/// of a pair and one for when it is the right member; both are 1 for
/// interior units, so `pi_kl = pi_k pi_l (1 - left_k right_l c(r_k, r_l))`.
struct PairKernel<'a, T> {
    probs: &'a [T],
    rank: Vec<usize>,
    left: Vec<T>,
    right: Vec<T>,
    /// `c[l]` for `l = 1..n`; index 0 unused.
    c: Vec<T>,
}

impl<'a, T: Scalar> PairKernel<'a, T> {
    fn new(frame: &'a Frame<T>) -> Self {
        let probs = frame.probs();
        let mut rank = Vec::with_capacity(probs.len());
        let mut left = Vec::with_capacity(probs.len());
        let mut right = Vec::with_capacity(probs.len());
        for (k, role) in frame.roles().iter().enumerate() {
            rank.push(role.rank());
            match *role {
                UnitRole::Interior(_) => {
                    left.push(T::one());
                    right.push(T::one());
                }
                UnitRole::CrossBorder(i) => {
                    let p = &probs[k];
                    let b = frame.b(i);
                    left.push(b.clone() * complement(p) / (p.clone() * complement(&b)));
                    right.push(complement(p) * complement(&b) / (p.clone() * b));
                }
            }
        }
        let c = std::iter::once(T::one())
            .chain((1..frame.n()).map(|l| frame.c_factor(l)))
            .collect();
        Self {
            probs,
            rank,
            left,
            right,
            c,
        }
    }

    fn pair(&self, k: usize, l: usize, c: &T) -> T {
        let both = self.probs[k].clone() * self.probs[l].clone();
        let term = self.left[k].clone() * self.right[l].clone() * c.clone();
        both * complement(&term)
    }

    /// Calls `f(q, pi_pq)` for every `q != p`.
    fn row(&self, p: usize, mut f: impl FnMut(usize, T)) {
        let len = self.probs.len();
        let mut c_run = T::one();
        let mut r = self.rank[p];
        for q in p + 1..len {
            while r < self.rank[q] {
                c_run = c_run * self.c[r].clone();
                r += 1;
            }
            f(q, self.pair(p, q, &c_run));
        }
        let mut c_run = T::one();
        let mut r = self.rank[p];
        for q in (0..p).rev() {
            while r > self.rank[q] {
                r -= 1;
                c_run = c_run * self.c[r].clone();
            }
            f(q, self.pair(q, p, &c_run));
        }
    }
}

/// Full Chromy matrix for the frame's order.
pub fn chromy_matrix<T: Scalar>(frame: &Frame<T>) -> JointProbabilityMatrix<T> {
    let len = frame.len();
    let kernel = PairKernel::new(frame);
    let mut values = vec![T::zero(); len * len];
    values
        .par_chunks_mut(len)
        .enumerate()
        .for_each(|(p, row)| {
            row[p] = frame.prob(p).clone();
            kernel.row(p, |q, v| row[q] = v);
        });
    JointProbabilityMatrix {
        size: len,
        values,
        provenance: Provenance::ClosedForm,
    }
}

/// Randomized Chromy matrix: the closed form averaged over the `N` circular
/// permutations. `O(N^3)` work; each permutation's rows are spread over the
/// rayon pool and accumulated in permutation order, so float results do not
/// depend on the thread count.
pub fn randomized_matrix<T: Scalar>(params: &DesignParams<T>) -> JointProbabilityMatrix<T> {
    let len = params.len();
    let n = T::from_usize(params.n());
    let mut values = vec![T::zero(); len * len];
    for start in 0..len {
        let frame = Frame::new(params.rotated(start));
        let kernel = PairKernel::new(&frame);
        let weight = params.prob(start).clone() / n.clone();
        values
            .par_chunks_mut(len)
            .enumerate()
            .for_each(|(unit, row)| {
                let p = (unit + len - start) % len;
                kernel.row(p, |q, v| {
                    let col = (q + start) % len;
                    row[col] = row[col].clone() + weight.clone() * v;
                });
            });
    }
    for k in 0..len {
        values[k * len + k] = params.prob(k).clone();
    }
    JointProbabilityMatrix {
        size: len,
        values,
        provenance: Provenance::PermutationAveraged,
    }
}

/// Draws per Monte-Carlo shard. Shard `s` of a run seeded with `seed` uses
/// [`substream`]`(seed, MONTE_CARLO_BASE + s)`.
pub const MONTE_CARLO_SHARD: u64 = 1 << 16;

/// Empirical randomized Chromy matrix from `draws` seeded samples.
pub fn monte_carlo_matrix<T: Scalar>(
    params: &DesignParams<T>,
    draws: u64,
    seed: u64,
) -> Result<JointProbabilityMatrix<T>> {
    if draws == 0 {
        return Err(Error::ZeroDraws);
    }
    let len = params.len();
    let frame = Frame::new(params.clone());
    let shards = draws.div_ceil(MONTE_CARLO_SHARD);
    let counts = (0..shards)
        .into_par_iter()
        .map(|shard| -> Result<Vec<u64>> {
            let mut rng = substream(seed, streams::MONTE_CARLO_BASE + shard);
            let mut counts = vec![0u64; len * len];
            let todo = MONTE_CARLO_SHARD.min(draws - shard * MONTE_CARLO_SHARD);
            for _ in 0..todo {
                let sample = randomized_chromy_sample(&frame, &mut rng)?;
                for (x, &k) in sample.selected.iter().enumerate() {
                    counts[k * len + k] += 1;
                    for &l in &sample.selected[x + 1..] {
                        counts[k * len + l] += 1;
                    }
                }
            }
            Ok(counts)
        })
        .try_reduce(
            || vec![0u64; len * len],
            |mut acc, part| {
                acc.iter_mut().zip(part).for_each(|(a, b)| *a += b);
                Ok(acc)
            },
        )?;
    let mut values = vec![T::zero(); len * len];
    for k in 0..len {
        for l in k..len {
            let v = T::from_ratio(counts[k * len + l], draws);
            values[l * len + k] = v.clone();
            values[k * len + l] = v;
        }
    }
    Ok(JointProbabilityMatrix {
        size: len,
        values,
        provenance: Provenance::MonteCarlo { draws, seed },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(s: &str) -> BigRational {
        BigRational::parse_str(s).unwrap()
    }

    fn worked() -> Frame<BigRational> {
        Frame::new(DesignParams::from_strs(&["0.4", "0.8", "0.5", "0.6", "0.7"]).unwrap())
    }

    #[test]
    fn worked_example_spot_checks() {
        let f = worked();
        assert_eq!(second_order_chromy(&f, 0, 2).unwrap(), q("0.125"));
        assert_eq!(second_order_chromy(&f, 3, 4).unwrap(), q("0.3"));
        assert_eq!(second_order_chromy(&f, 4, 3).unwrap(), q("0.3"));
        assert_eq!(second_order_chromy(&f, 0, 1).unwrap(), q("0.2"));
    }

    #[test]
    fn same_microstratum_interior_pair_is_zero() {
        let f = Frame::new(
            DesignParams::<BigRational>::from_strs(&["0.2", "0.4", "0.7", "0.4", "0.6", "0.6", "0.3", "0.8"])
                .unwrap(),
        );
        assert_eq!(second_order_chromy(&f, 0, 1).unwrap(), q("0"));
    }

    #[test]
    fn out_of_range_unit() {
        assert!(matches!(
            second_order_chromy(&worked(), 0, 9),
            Err(Error::UnitOutOfRange { unit: 9, size: 5 })
        ));
    }

    #[test]
    fn row_kernel_agrees_with_case_dispatch() {
        let f = worked();
        let m = chromy_matrix(&f);
        for k in 0..5 {
            for l in 0..5 {
                assert_eq!(m.get(k, l), &second_order_chromy(&f, k, l).unwrap(), "({k},{l})");
            }
        }
        assert!(m.is_symmetric());
        assert_eq!(m.row_sum_deviation(3), q("0"));
    }

    #[test]
    fn randomized_matrix_properties() {
        let params =
            DesignParams::<BigRational>::from_strs(&["0.2", "0.4", "0.7", "0.4", "0.6", "0.6", "0.3", "0.8"])
                .unwrap();
        let m = randomized_matrix(&params);
        assert!(m.is_symmetric());
        assert_eq!(m.first_order(), params.probs());
        assert_eq!(m.row_sum_deviation(4), q("0"));
        assert!(m.syg_violations().is_empty());
        assert!(m.values().iter().all(|v| *v > q("0")));
    }

    #[test]
    fn monte_carlo_rejects_zero_draws() {
        let params = DesignParams::from_strs(&["0.5", "0.5"]).unwrap();
        assert_eq!(monte_carlo_matrix::<f64>(&params, 0, 1), Err(Error::ZeroDraws));
    }

    #[test]
    fn monte_carlo_is_seed_deterministic() {
        let params = crate::frame::validate_params(vec![0.2, 0.4, 0.7, 0.4, 0.6, 0.6, 0.3, 0.8]).unwrap();
        let a = monte_carlo_matrix(&params, 70_000, 5).unwrap();
        let b = monte_carlo_matrix(&params, 70_000, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.provenance(), Provenance::MonteCarlo { draws: 70_000, seed: 5 });
        let c = monte_carlo_matrix(&params, 70_000, 6).unwrap();
        assert_ne!(a, c);
    }
}
