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

//! Monte-Carlo study of variance and interval estimation under randomized
//! Chromy sampling with probabilities proportional to size.
//!
//! A run generates one population (an auxiliary size `x` and four study
//! variables), and for each sample size derives the probabilities, computes
//! the randomized Chromy matrix once, then draws `B` samples. Every random
//! draw comes from a [`substream`] of the configured seeds, so results are
//! bit-identical across runs and thread counts.

use crate::chromy::randomized_chromy_sample;
use crate::error::{Error, Result};
use crate::estimators::{estimate_record, ht_variance, mc_summary, EstimateRecord, McSummary, Z_95};
use crate::frame::{validate_params, DesignParams, Frame};
use crate::inclusion::{monte_carlo_matrix, randomized_matrix, JointProbabilityMatrix, Provenance};
use crate::scalar::{CompensatedSum, Scalar};
use crate::seeding::{streams, substream};
use rand::Rng;
use rand_distr::{Distribution, Gamma, LogNormal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Law of the auxiliary variable before rescaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum XLaw {
    Gamma { shape: f64, scale: f64 },
    Lognormal { mu: f64, sigma: f64 },
}

impl XLaw {
    fn sample_n<R: Rng + ?Sized>(self, size: usize, rng: &mut R) -> Result<Vec<f64>> {
        let bad = |e: &dyn std::fmt::Display| Error::InvalidConfig(format!("x law: {e}"));
        Ok(match self {
            XLaw::Gamma { shape, scale } => {
                let law = Gamma::new(shape, scale).map_err(|e| bad(&e))?;
                (0..size).map(|_| law.sample(rng)).collect()
            }
            XLaw::Lognormal { mu, sigma } => {
                let law = LogNormal::new(mu, sigma).map_err(|e| bad(&e))?;
                (0..size).map(|_| law.sample(rng)).collect()
            }
        })
    }
}

/// `y = intercept + slope * t + sigma * eps`, where `t` is `x - mean(x)` for
/// the linear model and `(x - mean(x))^2` for the quadratic one. For the
/// exponential model `y = exp(intercept + slope * (x - mean(x))) + sigma * eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendModel {
    pub intercept: f64,
    pub slope: f64,
    pub sigma: f64,
}

/// `y = intercept + curvature * d^2 - depth * exp(-width * d^2) + sigma * eps`
/// with `d = x - mean(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpModel {
    pub intercept: f64,
    pub curvature: f64,
    pub depth: f64,
    pub width: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelCoefficients {
    pub linear: TrendModel,
    pub quadratic: TrendModel,
    pub exponential: TrendModel,
    pub bump: BumpModel,
}

impl Default for ModelCoefficients {
    fn default() -> Self {
        Self::gamma_default()
    }
}

impl ModelCoefficients {
    /// Values tuned so that, on the gamma population, the study variables
    /// have means near 10 to 12 and variances between about 13 and 85.
    pub fn gamma_default() -> Self {
        Self {
            linear: TrendModel {
                intercept: 10.0,
                slope: 1.7,
                sigma: 2.9,
            },
            quadratic: TrendModel {
                intercept: 11.0,
                slope: 0.6,
                sigma: 7.5,
            },
            exponential: TrendModel {
                intercept: 10f64.ln(),
                slope: 0.2,
                sigma: 3.0,
            },
            bump: BumpModel {
                intercept: 13.5,
                curvature: 0.6,
                depth: 5.0,
                width: 1.0,
                sigma: 8.8,
            },
        }
    }

    /// Values for the lognormal population, whose rescaled sizes are
    /// concentrated near 1: means between 5 and 10, variances between about
    /// 4 and 18.
    pub fn lognormal_default() -> Self {
        Self {
            linear: TrendModel {
                intercept: 10.0,
                slope: 1.5,
                sigma: 2.1,
            },
            quadratic: TrendModel {
                intercept: 8.5,
                slope: 0.3,
                sigma: 2.8,
            },
            exponential: TrendModel {
                intercept: 10f64.ln(),
                slope: 0.1,
                sigma: 1.8,
            },
            bump: BumpModel {
                intercept: 10.0,
                curvature: 0.25,
                depth: 5.0,
                width: 1.0,
                sigma: 3.8,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variable {
    Linear,
    Quadratic,
    Exponential,
    Bump,
}

impl Variable {
    pub const ALL: [Variable; 4] = [
        Variable::Linear,
        Variable::Quadratic,
        Variable::Exponential,
        Variable::Bump,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variable::Linear => "linear",
            Variable::Quadratic => "quadratic",
            Variable::Exponential => "exponential",
            Variable::Bump => "bump",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub size: usize,
    pub x_law: XLaw,
    #[serde(default)]
    pub models: ModelCoefficients,
    pub seed: u64,
}

impl PopulationSpec {
    /// 500 units with gamma(2, 2) sizes.
    pub fn gamma_population(seed: u64) -> Self {
        Self {
            size: 500,
            x_law: XLaw::Gamma {
                shape: 2.0,
                scale: 2.0,
            },
            models: ModelCoefficients::default(),
            seed,
        }
    }

    /// 500 units with lognormal(0, 1.7) sizes.
    pub fn lognormal_population(seed: u64) -> Self {
        Self {
            size: 500,
            x_law: XLaw::Lognormal {
                mu: 0.0,
                sigma: 1.7,
            },
            models: ModelCoefficients::lognormal_default(),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariableMoments {
    pub mean: f64,
    /// Population variance with divisor `N - 1`.
    pub variance: f64,
}

fn moments(v: &[f64]) -> VariableMoments {
    let len = v.len() as f64;
    let mean = v.iter().copied().collect::<CompensatedSum<f64>>().into_value() / len;
    let ss = v
        .iter()
        .map(|y| (y - mean) * (y - mean))
        .collect::<CompensatedSum<f64>>()
        .into_value();
    VariableMoments {
        mean,
        variance: if v.len() > 1 { ss / (len - 1.0) } else { 0.0 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub x: Vec<f64>,
    /// Study variables in [`Variable::ALL`] order.
    pub y: [Vec<f64>; 4],
    pub moments: [VariableMoments; 4],
}

impl Population {
    pub fn variable(&self, v: Variable) -> &[f64] {
        &self.y[v as usize]
    }
}

/// Affine map sending the minimum to 1 and the maximum to 10.
pub fn rescale_to_range(raw: &[f64]) -> Result<Vec<f64>> {
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if raw.is_empty() || !(hi > lo) {
        return Err(Error::DegenerateX);
    }
    let span = hi - lo;
    Ok(raw
        .iter()
        .map(|&v| {
            if v == lo {
                1.0
            } else if v == hi {
                10.0
            } else {
                1.0 + 9.0 * (v - lo) / span
            }
        })
        .collect())
}

/// Draws the sizes, then `N` standard normal errors per model in model order.
pub fn generate_population<R: Rng + ?Sized>(spec: &PopulationSpec, rng: &mut R) -> Result<Population> {
    let raw = spec.x_law.sample_n(spec.size, rng)?;
    let x = rescale_to_range(&raw)?;
    let mu = moments(&x).mean;
    let m = &spec.models;
    let mut noise = || -> Vec<f64> { (0..spec.size).map(|_| StandardNormal.sample(rng)).collect() };
    let (e1, e2, e3, e4) = (noise(), noise(), noise(), noise());
    let d: Vec<f64> = x.iter().map(|v| v - mu).collect();
    let y1 = d
        .iter()
        .zip(&e1)
        .map(|(d, e)| m.linear.intercept + m.linear.slope * d + m.linear.sigma * e)
        .collect::<Vec<_>>();
    let y2 = d
        .iter()
        .zip(&e2)
        .map(|(d, e)| m.quadratic.intercept + m.quadratic.slope * d * d + m.quadratic.sigma * e)
        .collect::<Vec<_>>();
    let y3 = d
        .iter()
        .zip(&e3)
        .map(|(d, e)| (m.exponential.intercept + m.exponential.slope * d).exp() + m.exponential.sigma * e)
        .collect::<Vec<_>>();
    let b = m.bump;
    let y4 = d
        .iter()
        .zip(&e4)
        .map(|(d, e)| b.intercept + b.curvature * d * d - b.depth * (-b.width * d * d).exp() + b.sigma * e)
        .collect::<Vec<_>>();
    let moments = [moments(&y1), moments(&y2), moments(&y3), moments(&y4)];
    Ok(Population {
        x,
        y: [y1, y2, y3, y4],
        moments,
    })
}

/// Probabilities proportional to size after removing certainty units.
#[derive(Debug, Clone, PartialEq)]
pub struct PipsDesign<T> {
    /// Units included with probability 1, ascending.
    pub certainty: Vec<usize>,
    /// Units left to sample, ascending; position `p` of `params` is unit
    /// `sampled_units[p]`.
    pub sampled_units: Vec<usize>,
    /// `None` when every unit is a certainty.
    pub params: Option<DesignParams<T>>,
}

impl<T: Scalar> PipsDesign<T> {
    /// Inclusion probability of every unit, certainties included.
    pub fn full_probs(&self, size: usize) -> Vec<T> {
        let mut out = vec![T::one(); size];
        if let Some(params) = &self.params {
            for (p, &k) in self.sampled_units.iter().enumerate() {
                out[k] = params.prob(p).clone();
            }
        }
        out
    }
}

/// `pi_k = n x_k / sum x`, iterated: units reaching 1 become certainties, `n`
/// drops by their number and the rest is recomputed.
pub fn pips_probabilities<T: Scalar>(x: &[T], n: usize) -> Result<PipsDesign<T>> {
    for (unit, v) in x.iter().enumerate() {
        if *v <= T::zero() {
            return Err(Error::NonPositiveSize {
                unit,
                value: v.to_f64(),
            });
        }
    }
    if n > x.len() {
        return Err(Error::InfeasibleSize { n, size: x.len() });
    }
    if n == 0 {
        return Err(Error::ZeroSampleSize);
    }
    let mut certainty = Vec::new();
    let mut remaining: Vec<usize> = (0..x.len()).collect();
    let mut left = n;
    loop {
        if left == remaining.len() {
            certainty.append(&mut remaining);
            break;
        }
        let total = remaining
            .iter()
            .map(|&k| x[k].clone())
            .collect::<CompensatedSum<T>>()
            .into_value();
        let scale = T::from_usize(left) / total;
        let (sure, rest): (Vec<usize>, Vec<usize>) = remaining
            .iter()
            .partition(|&&k| scale.clone() * x[k].clone() >= T::one());
        if sure.is_empty() {
            let probs = remaining
                .iter()
                .map(|&k| scale.clone() * x[k].clone())
                .collect();
            certainty.sort_unstable();
            return Ok(PipsDesign {
                certainty,
                sampled_units: remaining,
                params: Some(validate_params(probs)?),
            });
        }
        left -= sure.len();
        certainty.extend(sure);
        remaining = rest;
        if left == 0 {
            // Only reachable if the remaining units carry no size.
            return Err(Error::InvalidConfig("no sample size left after certainty units".into()));
        }
    }
    certainty.sort_unstable();
    Ok(PipsDesign {
        certainty,
        sampled_units: Vec::new(),
        params: None,
    })
}

fn default_z() -> f64 {
    Z_95
}

fn default_exact_threshold() -> usize {
    600
}

fn default_mc_draws() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub population: PopulationSpec,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    /// Seed of the replicate streams.
    pub seed: u64,
    #[serde(default = "default_z")]
    pub z: f64,
    /// Largest number of non-certainty units for which the exact matrix is
    /// computed; larger designs use a Monte-Carlo matrix.
    #[serde(default = "default_exact_threshold")]
    pub exact_threshold: usize,
    #[serde(default = "default_mc_draws")]
    pub mc_draws: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::NoReplicates);
        }
        if self.sample_sizes.is_empty() {
            return Err(Error::InvalidConfig("no sample sizes".into()));
        }
        if self.sample_sizes.len() > 1 << 16 || self.replicates > 1 << 24 {
            return Err(Error::InvalidConfig("too many sample sizes or replicates".into()));
        }
        if !(self.z > 0.0) {
            return Err(Error::InvalidConfig(format!("z must be positive, got {}", self.z)));
        }
        Ok(())
    }
}

/// Properties of the design used for one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDiagnostics {
    pub n: usize,
    pub certainty_units: usize,
    pub sampled_units: usize,
    pub min_prob: f64,
    pub max_prob: f64,
    pub matrix: Provenance,
    /// Pairs with `pi_kl > pi_k pi_l`, where the SYG estimator can go
    /// negative.
    pub syg_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub variable: Variable,
    pub true_total: f64,
    pub true_variance: f64,
    /// `None` when the true variance is zero and the relative measures are
    /// undefined.
    pub summary: Option<McSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub moments: [VariableMoments; 4],
    pub designs: Vec<DesignDiagnostics>,
    pub rows: Vec<ResultRow>,
}

/// Variance below this fraction of `sum (y_k / pi_k)^2` is treated as zero.
const ZERO_VARIANCE_RATIO: f64 = 1e-12;

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResults> {
    config.validate()?;
    let mut rng = substream(config.population.seed, streams::POPULATION);
    let population = generate_population(&config.population, &mut rng)?;
    let mut designs = Vec::new();
    let mut rows = Vec::new();
    for (m, &n) in config.sample_sizes.iter().enumerate() {
        let pips = pips_probabilities(&population.x, n)?;
        let (diag, mut block) = run_sample_size(config, &population, &pips, n, m as u64)?;
        designs.push(diag);
        rows.append(&mut block);
    }
    Ok(ExperimentResults {
        moments: population.moments,
        designs,
        rows,
    })
}

fn run_sample_size(
    config: &ExperimentConfig,
    population: &Population,
    pips: &PipsDesign<f64>,
    n: usize,
    m: u64,
) -> Result<(DesignDiagnostics, Vec<ResultRow>)> {
    let certain_total = |y: &[f64]| pips.certainty.iter().map(|&k| y[k]).sum::<f64>();
    let Some(params) = &pips.params else {
        // Census: every estimate is exact.
        let diag = DesignDiagnostics {
            n,
            certainty_units: pips.certainty.len(),
            sampled_units: 0,
            min_prob: 1.0,
            max_prob: 1.0,
            matrix: Provenance::ClosedForm,
            syg_violations: 0,
        };
        let rows = Variable::ALL
            .iter()
            .map(|&v| ResultRow {
                n,
                variable: v,
                true_total: certain_total(population.variable(v)),
                true_variance: 0.0,
                summary: None,
            })
            .collect();
        return Ok((diag, rows));
    };
    let joint: JointProbabilityMatrix<f64> = if params.len() <= config.exact_threshold {
        randomized_matrix(params)
    } else {
        monte_carlo_matrix(params, config.mc_draws, config.seed ^ m)?
    };
    let probs = params.probs();
    let diag = DesignDiagnostics {
        n,
        certainty_units: pips.certainty.len(),
        sampled_units: params.len(),
        min_prob: probs.iter().copied().fold(f64::INFINITY, f64::min),
        max_prob: probs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        matrix: joint.provenance(),
        syg_violations: joint.syg_violations().len(),
    };

    let reduced: Vec<Vec<f64>> = Variable::ALL
        .iter()
        .map(|&v| {
            let y = population.variable(v);
            pips.sampled_units.iter().map(|&k| y[k]).collect()
        })
        .collect();
    let offsets: Vec<f64> = Variable::ALL
        .iter()
        .map(|&v| certain_total(population.variable(v)))
        .collect();

    let frame = Frame::new(params.clone());
    let replicates: Vec<[EstimateRecord; 4]> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|b| -> Result<[EstimateRecord; 4]> {
            let mut rng = substream(config.seed, streams::REPLICATE_BASE + (m << 24) + b);
            let sample = randomized_chromy_sample(&frame, &mut rng)?;
            let mut out = [EstimateRecord::new(0.0, 0.0, config.z); 4];
            for (i, y) in reduced.iter().enumerate() {
                let r = estimate_record(&sample.selected, y, &joint, config.z)?;
                out[i] = EstimateRecord::new(r.ht + offsets[i], r.syg_var, config.z);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(4);
    for (i, &v) in Variable::ALL.iter().enumerate() {
        let true_total = population.variable(v).iter().copied().collect::<CompensatedSum<f64>>().into_value();
        let true_variance = ht_variance(&reduced[i], &joint)?;
        let scale: f64 = reduced[i]
            .iter()
            .zip(probs)
            .map(|(y, p)| (y / p) * (y / p))
            .sum();
        let summary = if true_variance.abs() <= ZERO_VARIANCE_RATIO * scale {
            None
        } else {
            let records: Vec<EstimateRecord> = replicates.iter().map(|r| r[i]).collect();
            Some(mc_summary(&records, true_total, true_variance)?)
        };
        rows.push(ResultRow {
            n,
            variable: v,
            true_total,
            true_variance,
            summary,
        });
    }
    Ok((diag, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(s: &str) -> BigRational {
        BigRational::parse_str(s).unwrap()
    }

    #[test]
    fn pips_without_certainty() {
        let x: Vec<BigRational> = ["1", "2", "3", "4"].iter().map(|s| q(s)).collect();
        let d = pips_probabilities(&x, 2).unwrap();
        assert!(d.certainty.is_empty());
        let p = d.params.unwrap();
        assert_eq!(p.probs(), &[q("0.2"), q("0.4"), q("0.6"), q("0.8")]);
    }

    #[test]
    fn pips_with_one_certainty() {
        let x: Vec<BigRational> = ["1", "1", "8"].iter().map(|s| q(s)).collect();
        let d = pips_probabilities(&x, 2).unwrap();
        assert_eq!(d.certainty, vec![2]);
        assert_eq!(d.sampled_units, vec![0, 1]);
        assert_eq!(d.params.as_ref().unwrap().probs(), &[q("0.5"), q("0.5")]);
        assert_eq!(d.full_probs(3), vec![q("0.5"), q("0.5"), q("1")]);
    }

    #[test]
    fn pips_census_and_errors() {
        let x = vec![1.0, 2.0, 3.0];
        let d = pips_probabilities(&x, 3).unwrap();
        assert_eq!(d.certainty, vec![0, 1, 2]);
        assert!(d.params.is_none());
        assert_eq!(pips_probabilities(&x, 4), Err(Error::InfeasibleSize { n: 4, size: 3 }));
        assert!(matches!(
            pips_probabilities(&[1.0, 0.0], 1),
            Err(Error::NonPositiveSize { unit: 1, .. })
        ));
    }

    #[test]
    fn pips_cascading_certainties() {
        // 100 forces a certainty; then 50 does too once n drops to 2.
        let x = vec![100.0, 50.0, 1.0, 1.0, 1.0, 1.0];
        let d = pips_probabilities(&x, 3).unwrap();
        assert_eq!(d.certainty, vec![0, 1]);
        assert_eq!(d.params.unwrap().probs(), &[0.25; 4]);
    }

    #[test]
    fn rescale_hits_both_ends() {
        let x = rescale_to_range(&[3.0, 0.5, 7.25, 2.0]).unwrap();
        assert_eq!(x[1], 1.0);
        assert_eq!(x[2], 10.0);
        assert!(x.iter().all(|v| (1.0..=10.0).contains(v)));
        assert_eq!(rescale_to_range(&[2.0, 2.0]), Err(Error::DegenerateX));
    }

    #[test]
    fn noise_free_linear_model_is_affine() {
        let mut spec = PopulationSpec::gamma_population(3);
        spec.size = 50;
        spec.models.linear.sigma = 0.0;
        let pop = generate_population(&spec, &mut substream(3, streams::POPULATION)).unwrap();
        let mu = moments(&pop.x).mean;
        for (x, y) in pop.x.iter().zip(pop.variable(Variable::Linear)) {
            let expected = spec.models.linear.intercept + spec.models.linear.slope * (x - mu);
            assert!((y - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn small_experiment_is_deterministic() {
        let mut spec = PopulationSpec::gamma_population(11);
        spec.size = 40;
        let config = ExperimentConfig {
            population: spec,
            sample_sizes: vec![5, 10],
            replicates: 50,
            seed: 99,
            z: Z_95,
            exact_threshold: 600,
            mc_draws: 1000,
        };
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 8);
        assert!(a.rows.iter().all(|r| r.summary.is_some()));
    }

    #[test]
    fn zero_replicates_rejected() {
        let config = ExperimentConfig {
            population: PopulationSpec::gamma_population(1),
            sample_sizes: vec![10],
            replicates: 0,
            seed: 1,
            z: Z_95,
            exact_threshold: 600,
            mc_draws: 1000,
        };
        assert_eq!(run_experiment(&config), Err(Error::NoReplicates));
    }
}
