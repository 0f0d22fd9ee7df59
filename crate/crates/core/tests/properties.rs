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


mod common;

use chromy_core::frame::validate_params;
use chromy_core::simulation::pips_probabilities;
use chromy_core::{
    build_clustered, chromy_matrix, chromy_sample, design_moments, enumerate_design, pivotal_sample,
    randomized_chromy_sample, randomized_matrix, substream, transition_table, two_stage_sample, Exact, ExactFrame,
    FloatFrame, SamplerTag,
};
use common::*;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn rational_population() -> impl Strategy<Value = chromy_core::ExactParams> {
    any::<u64>().prop_map(|seed| random_rational_params(&mut substream(seed, 0), 8))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn microstrata_carry_unit_mass(p in rational_population()) {
        let f = ExactFrame::new(p);
        let c = build_clustered(&f);
        for i in 1..=f.n() {
            let mass = f.b(i - 1) + c.phi()[2 * i - 2].clone() + f.a(i);
            prop_assert!(mass.is_one());
        }
        for (i, &k) in f.cross_border().iter().enumerate() {
            prop_assert_eq!(f.a(i + 1) + f.b(i + 1), f.prob(k).clone());
        }
    }

    #[test]
    fn chromy_matrix_rows_sum_to_n_minus_one_times_pi(p in rational_population()) {
        let m = chromy_matrix(&ExactFrame::new(p.clone()));
        prop_assert!(m.is_symmetric());
        prop_assert!(m.row_sum_deviation(p.n()).is_zero());
        prop_assert!(m.syg_violations().is_empty());
    }

    #[test]
    fn randomized_matrix_rows_sum_to_n_minus_one_times_pi(p in rational_population()) {
        let m = randomized_matrix(&p);
        prop_assert!(m.is_symmetric());
        prop_assert!(m.row_sum_deviation(p.n()).is_zero());
        let d = enumerate_design(SamplerTag::RandomizedChromy, &p).unwrap();
        let joint = design_moments(&d, &p, None).unwrap().joint;
        prop_assert_eq!(joint.values(), m.values());
    }

    #[test]
    fn transition_rows_are_distributions(p in rational_population()) {
        let table = transition_table(&ExactFrame::new(p)).unwrap();
        for step in &table.steps {
            for row in step.rows() {
                prop_assert!(row.total().is_one());
                prop_assert!(row.to.iter().all(|(_, q)| *q >= Exact::zero()));
            }
        }
    }

    #[test]
    fn ht_is_unbiased_under_every_sampler(seed in any::<u64>()) {
        let mut rng = substream(seed, 0);
        let p = random_rational_params(&mut rng, 7);
        let y = random_values(&mut rng, p.len());
        let total: Exact = y.iter().cloned().sum();
        for tag in SamplerTag::ALL {
            let d = enumerate_design(tag, &p).unwrap();
            let m = design_moments(&d, &p, Some(&y)).unwrap();
            prop_assert_eq!(m.ht_mean.unwrap(), total.clone());
            prop_assert!(d.total().is_one());
        }
    }

    #[test]
    fn float_samplers_have_fixed_size(seed in any::<u64>(), len in 2usize..400) {
        let mut rng = substream(seed, 1);
        let (_, params) = dyadic_params(&mut rng, len);
        let n = params.n();
        let frame = FloatFrame::new(params);
        let clustered = build_clustered(&frame);
        for _ in 0..5 {
            prop_assert_eq!(chromy_sample(&frame, &mut rng).unwrap().len(), n);
            prop_assert_eq!(randomized_chromy_sample(&frame, &mut rng).unwrap().len(), n);
            prop_assert_eq!(pivotal_sample(&frame, &mut rng).unwrap().len(), n);
            prop_assert_eq!(two_stage_sample(&clustered, &frame, &mut rng).unwrap().len(), n);
        }
    }

    #[test]
    fn float_samplers_tolerate_inexact_decimals(seed in any::<u64>(), len in 3usize..300) {
        // Probabilities like 0.1 are not representable; the total is only
        // an integer up to rounding.
        let mut rng = substream(seed, 2);
        let n = rand::Rng::random_range(&mut rng, len.div_ceil(10)..=len * 9 / 10) as u64;
        let num = numerators(&mut rng, len, 10, 10 * n);
        let params = validate_params(num.iter().map(|&a| a as f64 / 10.0).collect()).unwrap();
        let n = params.n();
        let frame = FloatFrame::new(params);
        for _ in 0..5 {
            prop_assert_eq!(chromy_sample(&frame, &mut rng).unwrap().len(), n);
            prop_assert_eq!(pivotal_sample(&frame, &mut rng).unwrap().len(), n);
        }
    }

    #[test]
    fn certainty_iteration_yields_valid_designs(seed in any::<u64>(), len in 2usize..60) {
        let mut rng = substream(seed, 3);
        let x: Vec<f64> = (0..len).map(|_| rand::Rng::random_range(&mut rng, 0.01f64..1.0).powi(4)).collect();
        let n = rand::Rng::random_range(&mut rng, 1..=len);
        let d = pips_probabilities(&x, n).unwrap();
        prop_assert_eq!(d.certainty.len() + d.sampled_units.len(), len);
        match &d.params {
            Some(p) => prop_assert_eq!(p.n() + d.certainty.len(), n),
            None => prop_assert_eq!(d.certainty.len(), n),
        }
    }

    #[test]
    fn combined_estimator_with_certainties_is_unbiased(seed in any::<u64>()) {
        let mut rng = substream(seed, 4);
        let len = rand::Rng::random_range(&mut rng, 3usize..=8);
        // One dominant unit forces at least one certainty.
        let mut x: Vec<Exact> = (0..len)
            .map(|_| Exact::from_integer(BigInt::from(rand::Rng::random_range(&mut rng, 1i64..=9))))
            .collect();
        x[0] = Exact::from_integer(BigInt::from(100));
        let n = rand::Rng::random_range(&mut rng, 2..len);
        let d = pips_probabilities(&x, n).unwrap();
        prop_assert!(d.certainty.contains(&0));
        let y = random_values(&mut rng, len);
        let total: Exact = y.iter().cloned().sum();
        let certain: Exact = d.certainty.iter().map(|&k| y[k].clone()).sum();
        let Some(params) = &d.params else {
            prop_assert_eq!(certain, total);
            return Ok(());
        };
        let reduced: Vec<Exact> = d.sampled_units.iter().map(|&k| y[k].clone()).collect();
        let design = enumerate_design(SamplerTag::RandomizedChromy, params).unwrap();
        let m = design_moments(&design, params, Some(&reduced)).unwrap();
        prop_assert_eq!(certain + m.ht_mean.unwrap(), total);
    }
}
