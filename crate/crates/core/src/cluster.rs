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

//! Clustered view of a Chromy design.
//!
//! The population is grouped into `2n - 1` clusters: runs of interior units
//! between consecutive integers alternate with the cross-border singletons.
//! Chromy sampling on the clusters followed by one draw inside each selected
//! cluster reproduces Chromy sampling on the units, which gives a third,
//! independently coded sampler and closed-form transition probabilities
//! between consecutive selected clusters.
//!
//! Clusters are indexed from 0: index `j` is the cluster usually written
//! `u_{j+1}`, so interior runs sit at even indices and cross-border
//! singletons at odd ones.

use crate::chromy::{ChromyState, Sample};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::scalar::{complement, CompensatedSum, Scalar};
use rand::Rng;
use std::ops::Range;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredPopulation<T> {
    clusters: Vec<Range<usize>>,
    phi: Vec<T>,
}

impl<T: Scalar> ClusteredPopulation<T> {
    /// Unit positions of each cluster. Interior runs may be empty when two
    /// cross-border units are adjacent.
    pub fn clusters(&self) -> &[Range<usize>] {
        &self.clusters
    }

    /// Cluster masses.
    pub fn phi(&self) -> &[T] {
        &self.phi
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Index of the cluster holding `unit`.
    pub fn cluster_of(&self, unit: usize) -> usize {
        self.clusters.partition_point(|c| c.end <= unit)
    }
}

pub fn build_clustered<T: Scalar>(frame: &Frame<T>) -> ClusteredPopulation<T> {
    let n = frame.n();
    let len = frame.len();
    let mut clusters = Vec::with_capacity(2 * n - 1);
    let mut start = 0;
    for &k in frame.cross_border() {
        clusters.push(start..k);
        clusters.push(k..k + 1);
        start = k + 1;
    }
    clusters.push(start..len);
    let phi = clusters
        .iter()
        .map(|c| {
            frame.probs()[c.clone()]
                .iter()
                .cloned()
                .collect::<CompensatedSum<T>>()
                .into_value()
        })
        .collect();
    ClusteredPopulation { clusters, phi }
}

/// Two-stage sampler: Chromy sampling of clusters with parameter `phi`, then
/// one unit per selected cluster with probability `pi_k / phi`.
///
/// Draws one uniform per cluster of positive mass (stage one), then one per
/// selected cluster (stage two).
pub fn two_stage_sample<T: Scalar, R: Rng + ?Sized>(
    clustered: &ClusteredPopulation<T>,
    frame: &Frame<T>,
    rng: &mut R,
) -> Result<Sample> {
    let mut state = ChromyState::new();
    let mut chosen = Vec::with_capacity(frame.n());
    for (j, phi) in clustered.phi.iter().enumerate() {
        if phi.is_zero() {
            continue;
        }
        let u: f64 = rng.random();
        if state.step(phi.clone(), u)? {
            chosen.push(j);
        }
    }
    let mut selected = Vec::with_capacity(chosen.len());
    for j in chosen {
        let cluster = clustered.clusters[j].clone();
        let target = rng.random::<f64>() * clustered.phi[j].to_f64();
        let mut acc = 0.0;
        let mut pick = cluster.end - 1;
        for k in cluster {
            acc += frame.prob(k).to_f64();
            if target < acc {
                pick = k;
                break;
            }
        }
        selected.push(pick);
    }
    Ok(Sample::new(selected))
}

/// Conditional distribution of the next selected cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow<T> {
    /// Cluster of the current selection.
    pub from: usize,
    /// `(cluster, probability)` pairs for the next selection.
    pub to: Vec<(usize, T)>,
}

impl<T: Scalar> TransitionRow<T> {
    pub fn total(&self) -> T {
        self.to.iter().fold(T::zero(), |acc, (_, p)| acc + p.clone())
    }

    pub fn prob_to(&self, cluster: usize) -> T {
        self.to
            .iter()
            .find(|(j, _)| *j == cluster)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(T::zero)
    }
}

/// Transition rows from the `i`-th to the `(i+1)`-th selected cluster, for
/// `i = 1, ..., n-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionStep<T> {
    pub step: usize,
    /// From the cross-border cluster ending the previous microstratum; absent
    /// for the first step.
    pub from_previous_cross_border: Option<TransitionRow<T>>,
    pub from_interior: TransitionRow<T>,
    pub from_cross_border: TransitionRow<T>,
}

impl<T: Scalar> TransitionStep<T> {
    pub fn rows(&self) -> impl Iterator<Item = &TransitionRow<T>> {
        self.from_previous_cross_border
            .iter()
            .chain([&self.from_interior, &self.from_cross_border])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable<T> {
    pub steps: Vec<TransitionStep<T>>,
}

impl<T: Scalar> TransitionTable<T> {
    /// Looks up the row leaving `from` at step `i` (1-based).
    pub fn row(&self, step: usize, from: usize) -> Option<&TransitionRow<T>> {
        self.steps
            .get(step.checked_sub(1)?)?
            .rows()
            .find(|r| r.from == from)
    }
}

pub fn transition_table<T: Scalar>(frame: &Frame<T>) -> Result<TransitionTable<T>> {
    let n = frame.n();
    let cluster_count = 2 * n - 1;
    let mut steps = Vec::with_capacity(n.saturating_sub(1));
    for i in 1..n {
        let (a, b, a_next) = (frame.a(i), frame.b(i), frame.a(i + 1));
        let one_minus_a = complement(&a);
        let one_minus_b = complement(&b);
        if one_minus_a.is_zero() || one_minus_b.is_zero() {
            return Err(Error::DegenerateDenominator { boundary: i });
        }
        let denom = one_minus_a.clone() * one_minus_b.clone();
        let rest = T::one() - a.clone() - b.clone();
        let next_interior = T::one() - b.clone() - a_next.clone();

        // Cluster u_{2i} sits at index 2i - 1.
        let cross = 2 * i - 1;
        let keep = |to: Vec<(usize, T)>| -> Vec<(usize, T)> {
            to.into_iter()
                .filter(|(j, p)| *j < cluster_count || !p.is_zero())
                .collect()
        };
        let before_cross = keep(vec![
            (cross, b.clone() / one_minus_a.clone()),
            (cross + 1, next_interior.clone() * rest.clone() / denom.clone()),
            (cross + 2, a_next.clone() * rest / denom),
        ]);
        let after_cross = keep(vec![
            (cross + 1, next_interior / one_minus_b.clone()),
            (cross + 2, a_next / one_minus_b),
        ]);
        steps.push(TransitionStep {
            step: i,
            from_previous_cross_border: (i >= 2).then(|| TransitionRow {
                from: cross - 2,
                to: before_cross.clone(),
            }),
            from_interior: TransitionRow {
                from: cross - 1,
                to: before_cross,
            },
            from_cross_border: TransitionRow {
                from: cross,
                to: after_cross,
            },
        });
    }
    Ok(TransitionTable { steps })
}
