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

//! Horvitz-Thompson estimation, the Sen-Yates-Grundy variance estimator and
//! Monte-Carlo summaries of their behaviour.

use crate::error::{Error, Result};
use crate::inclusion::JointProbabilityMatrix;
use crate::scalar::{CompensatedSum, Scalar};
use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959964;

fn check_unit(unit: usize, size: usize) -> Result<()> {
    if unit >= size {
        return Err(Error::UnitOutOfRange { unit, size });
    }
    Ok(())
}

/// `sum_{k in s} y_k / pi_k`, with `y` and `pi` indexed by population unit.
pub fn horvitz_thompson<T: Scalar>(sample: &[usize], y: &[T], pi: &[T]) -> Result<T> {
    if y.len() != pi.len() {
        return Err(Error::DimensionMismatch {
            expected: pi.len(),
            actual: y.len(),
        });
    }
    let mut sum = CompensatedSum::new();
    for &k in sample {
        check_unit(k, pi.len())?;
        sum.add(y[k].clone() / pi[k].clone());
    }
    Ok(sum.into_value())
}

/// Sen-Yates-Grundy estimator of the variance of the HT total.
///
/// Fails with [`Error::ZeroJointProbability`] when a sampled pair has a zero
/// joint inclusion probability, since the estimator is then undefined.
pub fn syg_variance<T: Scalar>(
    sample: &[usize],
    y: &[T],
    joint: &JointProbabilityMatrix<T>,
) -> Result<T> {
    let size = joint.size();
    if y.len() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            actual: y.len(),
        });
    }
    for &k in sample {
        check_unit(k, size)?;
    }
    let mut sum = CompensatedSum::new();
    for (a, &k) in sample.iter().enumerate() {
        let pk = joint.get(k, k).clone();
        let ek = y[k].clone() / pk.clone();
        for &l in &sample[a + 1..] {
            let pkl = joint.get(k, l).clone();
            if pkl.is_zero() {
                return Err(Error::ZeroJointProbability { first: k, second: l });
            }
            let pl = joint.get(l, l).clone();
            let d = ek.clone() - y[l].clone() / pl.clone();
            sum.add((pk.clone() * pl - pkl.clone()) / pkl * d.clone() * d);
        }
    }
    Ok(sum.into_value())
}

/// True variance of the HT total, `sum_k sum_l (pi_kl - pi_k pi_l) e_k e_l`
/// with `e_k = y_k / pi_k`.
pub fn ht_variance<T: Scalar>(y: &[T], joint: &JointProbabilityMatrix<T>) -> Result<T> {
    let size = joint.size();
    if y.len() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            actual: y.len(),
        });
    }
    let e: Vec<T> = (0..size)
        .map(|k| y[k].clone() / joint.get(k, k).clone())
        .collect();
    let mut sum = CompensatedSum::new();
    for k in 0..size {
        let pk = joint.get(k, k).clone();
        for l in 0..size {
            let delta = joint.get(k, l).clone() - pk.clone() * joint.get(l, l).clone();
            sum.add(delta * e[k].clone() * e[l].clone());
        }
    }
    Ok(sum.into_value())
}

/// Point estimate, variance estimate and normal-theory interval for one
/// sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub ht: f64,
    pub syg_var: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl EstimateRecord {
    pub fn new(ht: f64, syg_var: f64, z: f64) -> Self {
        // Small negative estimates are possible; the interval then collapses.
        let half = z * syg_var.max(0.0).sqrt();
        Self {
            ht,
            syg_var,
            ci_low: ht - half,
            ci_high: ht + half,
        }
    }
}

pub fn estimate_record<T: Scalar>(
    sample: &[usize],
    y: &[T],
    joint: &JointProbabilityMatrix<T>,
    z: f64,
) -> Result<EstimateRecord> {
    let pi = joint.first_order();
    let ht = horvitz_thompson(sample, y, &pi)?;
    let var = syg_variance(sample, y, joint)?;
    Ok(EstimateRecord::new(ht.to_f64(), var.to_f64(), z))
}

/// Monte-Carlo behaviour of the variance estimator and its intervals over
/// `B` replicates; all values are in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub replicates: usize,
    /// Relative bias of the variance estimator.
    pub relative_bias: f64,
    /// Relative root mean squared error of the variance estimator.
    pub relative_rmse: f64,
    /// Share of intervals lying entirely above the true total.
    pub lower_tail_error: f64,
    /// Share of intervals lying entirely below the true total.
    pub upper_tail_error: f64,
    /// Share of intervals missing the true total.
    pub coverage_error: f64,
}

pub fn mc_summary(records: &[EstimateRecord], true_total: f64, true_variance: f64) -> Result<McSummary> {
    if records.is_empty() {
        return Err(Error::NoReplicates);
    }
    if true_variance == 0.0 {
        return Err(Error::ZeroTrueVariance);
    }
    let b = records.len() as f64;
    let mut bias = CompensatedSum::new();
    let mut square = CompensatedSum::new();
    let (mut below, mut above) = (0usize, 0usize);
    for r in records {
        let d = r.syg_var - true_variance;
        bias.add(d);
        square.add(d * d);
        if true_total < r.ci_low {
            below += 1;
        }
        if true_total > r.ci_high {
            above += 1;
        }
    }
    Ok(McSummary {
        replicates: records.len(),
        relative_bias: 100.0 * *bias.value() / b / true_variance,
        relative_rmse: 100.0 * (*square.value() / b).sqrt() / true_variance,
        lower_tail_error: 100.0 * below as f64 / b,
        upper_tail_error: 100.0 * above as f64 / b,
        coverage_error: 100.0 * (below + above) as f64 / b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{DesignParams, Frame};
    use crate::inclusion::chromy_matrix;
    use crate::oracle::{design_moments, enumerate_design, SamplerTag};
    use num_rational::BigRational;

    fn q(s: &str) -> BigRational {
        BigRational::parse_str(s).unwrap()
    }

    fn worked() -> (DesignParams<BigRational>, JointProbabilityMatrix<BigRational>) {
        let p = DesignParams::from_strs(&["0.4", "0.8", "0.5", "0.6", "0.7"]).unwrap();
        let m = chromy_matrix(&Frame::new(p.clone()));
        (p, m)
    }

    #[test]
    fn ht_of_single_sample() {
        let (p, _) = worked();
        let y = vec![q("2"), q("4"), q("1"), q("3"), q("7")];
        let ht = horvitz_thompson(&[0, 1, 3], &y, p.probs()).unwrap();
        assert_eq!(ht, q("15"));
        assert_eq!(
            horvitz_thompson(&[9], &y, p.probs()),
            Err(Error::UnitOutOfRange { unit: 9, size: 5 })
        );
    }

    #[test]
    fn syg_is_unbiased_and_ht_variance_matches_enumeration() {
        let (p, m) = worked();
        let y = vec![q("2"), q("4"), q("1"), q("3"), q("7")];
        let d = enumerate_design(SamplerTag::Chromy, &p).unwrap();
        let moments = design_moments(&d, &p, Some(&y)).unwrap();
        let truth = ht_variance(&y, &m).unwrap();
        assert_eq!(Some(truth.clone()), moments.ht_variance);
        let mean = d.probs.iter().fold(q("0"), |acc, (s, pr)| {
            acc + pr.clone() * syg_variance(s, &y, &m).unwrap()
        });
        assert_eq!(mean, truth);
    }

    #[test]
    fn syg_rejects_zero_joint_probability() {
        let p = DesignParams::<BigRational>::from_strs(&["0.5", "0.5", "0.5", "0.5"]).unwrap();
        let m = chromy_matrix(&Frame::new(p));
        let y = vec![q("1"); 4];
        assert!(matches!(
            syg_variance(&[0, 1], &y, &m),
            Err(Error::ZeroJointProbability { .. })
        ));
    }

    #[test]
    fn interval_uses_z() {
        let r = EstimateRecord::new(10.0, 4.0, Z_95);
        assert!((r.ci_low - (10.0 - 2.0 * Z_95)).abs() < 1e-12);
        assert!((r.ci_high - (10.0 + 2.0 * Z_95)).abs() < 1e-12);
        let r = EstimateRecord::new(10.0, -1.0, Z_95);
        assert_eq!((r.ci_low, r.ci_high), (10.0, 10.0));
    }

    #[test]
    fn summary_counts_tails() {
        let recs = [
            EstimateRecord::new(10.0, 1.0, 1.0),
            EstimateRecord::new(20.0, 3.0, 1.0),
            EstimateRecord::new(0.0, 2.0, 1.0),
            EstimateRecord::new(12.0, 2.0, 1.0),
        ];
        let s = mc_summary(&recs, 11.0, 2.0).unwrap();
        assert_eq!(s.replicates, 4);
        assert!((s.relative_bias - 0.0).abs() < 1e-12);
        assert!((s.relative_rmse - 100.0 * (0.5f64).sqrt() / 2.0).abs() < 1e-12);
        assert_eq!(s.lower_tail_error, 25.0);
        assert_eq!(s.upper_tail_error, 25.0);
        assert_eq!(s.coverage_error, 50.0);
        assert_eq!(mc_summary(&[], 1.0, 1.0), Err(Error::NoReplicates));
        assert_eq!(mc_summary(&recs, 1.0, 0.0), Err(Error::ZeroTrueVariance));
    }
}
