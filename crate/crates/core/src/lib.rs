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


//! Chromy sequential sampling, ordered pivotal sampling and randomized
//! Chromy sampling, with exact joint inclusion probabilities, an exhaustive
//! design oracle, Horvitz-Thompson/Sen-Yates-Grundy estimation and a
//! simulation harness.
//!
//! Everything numeric is generic over [`Scalar`], implemented for `f64` and
//! for exact rationals ([`Exact`]). The aliases below name the two concrete
//! instantiations.
//!
//! ```
//! use chromy_core::{chromy_sample, ExactFrame, ExactParams, substream};
//!
//! let params = ExactParams::from_strs(&["0.4", "0.8", "0.5", "0.6", "0.7"]).unwrap();
//! let frame = ExactFrame::new(params);
//! let sample = chromy_sample(&frame, &mut substream(7, 0)).unwrap();
//! assert_eq!(sample.len(), 3);
//! ```

pub mod chromy;
pub mod cluster;
pub mod error;
pub mod estimators;
pub mod frame;
pub mod inclusion;
pub mod oracle;
pub mod pivotal;
pub mod scalar;
pub mod seeding;
pub mod simulation;

pub use chromy::{
    chromy_sample, chromy_select, draw_start, randomized_chromy_sample, selection_probability,
    ChromySelect, ChromyState, Sample,
};
pub use cluster::{build_clustered, transition_table, two_stage_sample, ClusteredPopulation, TransitionTable};
pub use error::{Error, Result};
pub use estimators::{
    estimate_record, horvitz_thompson, ht_variance, mc_summary, syg_variance, EstimateRecord, McSummary, Z_95,
};
pub use frame::{build_frame, validate_params, DesignParams, Frame, UnitRole};
pub use inclusion::{
    chromy_matrix, monte_carlo_matrix, randomized_matrix, second_order_chromy, JointProbabilityMatrix, Provenance,
};
pub use oracle::{
    design_moments, enumerate_design, enumerate_design_with_cap, DesignDistribution, DesignMoments, SamplerTag,
};
pub use pivotal::pivotal_sample;
pub use scalar::{ArithmeticMode, CompensatedSum, Scalar};
pub use seeding::{substream, SeededRng};
pub use simulation::{
    generate_population, pips_probabilities, run_experiment, ExperimentConfig, ExperimentResults, PipsDesign,
    PopulationSpec,
};

/// Exact rational scalar.
pub type Exact = num_rational::BigRational;

pub type ExactParams = DesignParams<Exact>;
pub type FloatParams = DesignParams<f64>;
pub type ExactFrame = Frame<Exact>;
pub type FloatFrame = Frame<f64>;
pub type ExactMatrix = JointProbabilityMatrix<Exact>;
pub type FloatMatrix = JointProbabilityMatrix<f64>;
pub type ExactDesign = DesignDistribution<Exact>;
