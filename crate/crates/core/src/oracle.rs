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

//! Exact sampling designs by exhaustive traversal of each sampler's
//! probability tree.
//!
//! Intended for small populations in exact arithmetic, where it is the
//! ground truth against which the closed forms and the samplers are checked.
//! Zero-probability branches are pruned, so the work is bounded by the
//! number of reachable paths rather than `2^N`.

use crate::chromy::selection_probability;
use crate::cluster::build_clustered;
use crate::error::{Error, Result};
use crate::frame::{DesignParams, Frame, RunningProfile};
use crate::inclusion::{JointProbabilityMatrix, Provenance};
use crate::pivotal::{duel_outcomes, PivotalState};
use crate::scalar::Scalar;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Default population-size cap for [`enumerate_design`].
pub const DEFAULT_ENUMERATION_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerTag {
    Chromy,
    Pivotal,
    TwoStage,
    RandomizedChromy,
}

impl SamplerTag {
    pub const ALL: [SamplerTag; 4] = [
        SamplerTag::Chromy,
        SamplerTag::Pivotal,
        SamplerTag::TwoStage,
        SamplerTag::RandomizedChromy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplerTag::Chromy => "chromy",
            SamplerTag::Pivotal => "pivotal",
            SamplerTag::TwoStage => "two-stage",
            SamplerTag::RandomizedChromy => "randomized-chromy",
        }
    }
}

impl fmt::Display for SamplerTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SamplerTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown sampler {s:?}"))
    }
}

/// Exact law of a sampler: sorted samples mapped to their probability.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignDistribution<T> {
    pub sampler: SamplerTag,
    pub population_size: usize,
    pub probs: BTreeMap<Vec<usize>, T>,
}

impl<T: Scalar> DesignDistribution<T> {
    fn new(sampler: SamplerTag, population_size: usize) -> Self {
        Self {
            sampler,
            population_size,
            probs: BTreeMap::new(),
        }
    }

    fn add(&mut self, mut sample: Vec<usize>, prob: T) {
        sample.sort_unstable();
        let slot = self.probs.entry(sample).or_insert_with(T::zero);
        *slot = slot.clone() + prob;
    }

    pub fn total(&self) -> T {
        self.probs.values().fold(T::zero(), |acc, p| acc + p.clone())
    }

    pub fn prob(&self, sample: &[usize]) -> T {
        self.probs.get(sample).cloned().unwrap_or_else(T::zero)
    }

    /// Total-variation distance `1/2 sum |p(s) - q(s)|`.
    pub fn total_variation(&self, other: &Self) -> T {
        let mut keys: Vec<&Vec<usize>> = self.probs.keys().chain(other.probs.keys()).collect();
        keys.sort();
        keys.dedup();
        let sum = keys.into_iter().fold(T::zero(), |acc, s| {
            acc + (self.prob(s) - other.prob(s)).abs()
        });
        sum / T::from_usize(2)
    }
}

pub fn enumerate_design<T: Scalar>(
    sampler: SamplerTag,
    params: &DesignParams<T>,
) -> Result<DesignDistribution<T>> {
    enumerate_design_with_cap(sampler, params, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_design_with_cap<T: Scalar>(
    sampler: SamplerTag,
    params: &DesignParams<T>,
    cap: usize,
) -> Result<DesignDistribution<T>> {
    if params.len() > cap {
        return Err(Error::PopulationTooLarge {
            size: params.len(),
            cap,
        });
    }
    let mut dist = DesignDistribution::new(sampler, params.len());
    match sampler {
        SamplerTag::Chromy => {
            let frame = Frame::new(params.clone());
            for (sample, p) in chromy_leaves(&unit_steps(&frame))? {
                dist.add(sample, p);
            }
        }
        SamplerTag::RandomizedChromy => {
            let len = params.len();
            let n = T::from_usize(params.n());
            for start in 0..len {
                let weight = params.prob(start).clone() / n.clone();
                let frame = Frame::new(params.rotated(start));
                for (sample, p) in chromy_leaves(&unit_steps(&frame))? {
                    let original = sample.into_iter().map(|q| (q + start) % len).collect();
                    dist.add(original, weight.clone() * p);
                }
            }
        }
        SamplerTag::Pivotal => {
            let mut state = PivotalState::new(params.probs());
            pivotal_tree(&mut state, T::one(), &mut dist)?;
        }
        SamplerTag::TwoStage => two_stage_tree(params, &mut dist)?,
    }
    Ok(dist)
}

/// One scanned item of a Chromy pass: its label and the integer/fractional
/// parts of the cumulative sum before and after it.
struct ChromyStep<T> {
    label: usize,
    prev_integer: u64,
    prev_fractional: T,
    fractional: T,
}

fn unit_steps<T: Scalar>(frame: &Frame<T>) -> Vec<ChromyStep<T>> {
    let profile = frame.profile();
    (0..frame.len())
        .map(|k| ChromyStep {
            label: k,
            prev_integer: profile.integer[k],
            prev_fractional: profile.fractional[k].clone(),
            fractional: profile.fractional[k + 1].clone(),
        })
        .collect()
}

/// Steps for Chromy sampling over `(label, mass)` items, skipping items of
/// zero mass (they can never be selected).
fn mass_steps<T: Scalar>(items: impl IntoIterator<Item = (usize, T)>) -> Vec<ChromyStep<T>> {
    let mut profile = RunningProfile::<T>::new();
    let mut steps = Vec::new();
    for (label, mass) in items {
        if mass.is_zero() {
            continue;
        }
        let prev_integer = profile.integer();
        let prev_fractional = profile.fractional().clone();
        profile.push(mass);
        steps.push(ChromyStep {
            label,
            prev_integer,
            prev_fractional,
            fractional: profile.fractional().clone(),
        });
    }
    steps
}

fn chromy_leaves<T: Scalar>(steps: &[ChromyStep<T>]) -> Result<Vec<(Vec<usize>, T)>> {
    fn walk<T: Scalar>(
        steps: &[ChromyStep<T>],
        depth: usize,
        chosen: &mut Vec<usize>,
        prob: T,
        out: &mut Vec<(Vec<usize>, T)>,
    ) -> Result<()> {
        let Some(step) = steps.get(depth) else {
            out.push((chosen.clone(), prob));
            return Ok(());
        };
        let p = selection_probability(
            step.label,
            chosen.len() as u64,
            step.prev_integer,
            &step.prev_fractional,
            &step.fractional,
        )?;
        let q = T::one() - p.clone();
        if !p.is_zero() {
            chosen.push(step.label);
            walk(steps, depth + 1, chosen, prob.clone() * p, out)?;
            chosen.pop();
        }
        if !q.is_zero() {
            walk(steps, depth + 1, chosen, prob * q, out)?;
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(steps, 0, &mut Vec::new(), T::one(), &mut out)?;
    Ok(out)
}

fn pivotal_tree<T: Scalar>(
    state: &mut PivotalState<T>,
    prob: T,
    dist: &mut DesignDistribution<T>,
) -> Result<()> {
    let Some(pair) = state.next_pair() else {
        if !state.is_terminal() {
            return Err(Error::NonTermination {
                steps: state.steps(),
            });
        }
        let sample = (0..state.residual().len())
            .filter(|&k| state.residual()[k].is_one())
            .collect();
        dist.add(sample, prob);
        return Ok(());
    };
    let outcomes = duel_outcomes(&state.residual()[pair.0], &state.residual()[pair.1]);
    for outcome in outcomes {
        if outcome.prob.is_zero() {
            continue;
        }
        let mut branch = state.clone();
        branch.apply(pair, &outcome);
        pivotal_tree(&mut branch, prob.clone() * outcome.prob.clone(), dist)?;
    }
    Ok(())
}

fn two_stage_tree<T: Scalar>(params: &DesignParams<T>, dist: &mut DesignDistribution<T>) -> Result<()> {
    let frame = Frame::new(params.clone());
    let clustered = build_clustered(&frame);
    let steps = mass_steps(clustered.phi().iter().cloned().enumerate());
    for (clusters, p) in chromy_leaves(&steps)? {
        // Independent single draw inside every selected cluster.
        let mut partial: Vec<(Vec<usize>, T)> = vec![(Vec::new(), p)];
        for j in clusters {
            let phi = clustered.phi()[j].clone();
            let mut next = Vec::with_capacity(partial.len() * clustered.clusters()[j].len());
            for (chosen, w) in &partial {
                for k in clustered.clusters()[j].clone() {
                    let mut c = chosen.clone();
                    c.push(k);
                    next.push((c, w.clone() * params.prob(k).clone() / phi.clone()));
                }
            }
            partial = next;
        }
        for (sample, w) in partial {
            dist.add(sample, w);
        }
    }
    Ok(())
}

/// Exact moments of a design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMoments<T> {
    pub first_order: Vec<T>,
    pub joint: JointProbabilityMatrix<T>,
    /// `E[HT]` when values were supplied.
    pub ht_mean: Option<T>,
    /// `Var(HT)` when values were supplied.
    pub ht_variance: Option<T>,
}

/// Exact inclusion probabilities of `dist` and, given `y`, the mean and
/// variance of the Horvitz-Thompson estimator with weights from `params`.
pub fn design_moments<T: Scalar>(
    dist: &DesignDistribution<T>,
    params: &DesignParams<T>,
    y: Option<&[T]>,
) -> Result<DesignMoments<T>> {
    let len = dist.population_size;
    if params.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            actual: params.len(),
        });
    }
    if let Some(y) = y {
        if y.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                actual: y.len(),
            });
        }
    }
    let mut joint = vec![T::zero(); len * len];
    let mut first = T::zero();
    let mut second = T::zero();
    for (sample, p) in &dist.probs {
        for &k in sample {
            for &l in sample {
                joint[k * len + l] = joint[k * len + l].clone() + p.clone();
            }
        }
        if let Some(y) = y {
            let ht = sample.iter().fold(T::zero(), |acc, &k| {
                acc + y[k].clone() / params.prob(k).clone()
            });
            first = first + p.clone() * ht.clone();
            second = second + p.clone() * ht.clone() * ht;
        }
    }
    let joint = JointProbabilityMatrix::from_values(len, joint, Provenance::Enumerated)?;
    let first_order = joint.first_order();
    let (ht_mean, ht_variance) = match y {
        Some(_) => (Some(first.clone()), Some(second - first.clone() * first)),
        None => (None, None),
    };
    Ok(DesignMoments {
        first_order,
        joint,
        ht_mean,
        ht_variance,
    })
}
