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


use crate::error::{CliError, Result};
use crate::io::{self, Column, PopulationFile};
use chromy_core::cluster::{build_clustered, transition_table};
use chromy_core::seeding::streams;
use chromy_core::simulation::ExperimentResults;
use chromy_core::{
    chromy_matrix, chromy_sample, estimate_record, monte_carlo_matrix, pivotal_sample,
    randomized_chromy_sample, randomized_matrix, run_experiment, substream, two_stage_sample, validate_params,
    ArithmeticMode, Exact, ExperimentConfig, Frame, JointProbabilityMatrix, PipsDesign, Provenance, SamplerTag, Scalar,
    UnitRole,
};
use serde::Serialize;
use std::collections::HashMap;
use std::path::Path;

/// Population after certainty units have been set aside.
pub struct Prepared<T> {
    pub ids: Vec<String>,
    pub design: PipsDesign<T>,
}

impl<T: Scalar> Prepared<T> {
    fn ids_of(&self, units: &[usize]) -> Vec<String> {
        units.iter().map(|&k| self.ids[k].clone()).collect()
    }

    fn require_params(&self) -> Result<&chromy_core::DesignParams<T>> {
        self.design
            .params
            .as_ref()
            .ok_or_else(|| CliError::Validation("every unit is a certainty unit; nothing to sample".into()))
    }
}

pub fn prepare<T: Scalar>(pop: &PopulationFile, sample_size: Option<usize>) -> Result<Prepared<T>> {
    let parsed = pop
        .values
        .iter()
        .map(|v| T::parse_str(v))
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(chromy_core::Error::from)?;
    let design = match (pop.column, sample_size) {
        (Column::Size, Some(n)) => chromy_core::pips_probabilities(&parsed, n)?,
        (Column::Size, None) => {
            return Err(CliError::Usage("a unit_id,size population needs --sample-size".into()));
        }
        (Column::Prob, Some(_)) => {
            return Err(CliError::Usage("--sample-size only applies to unit_id,size populations".into()));
        }
        (Column::Prob, None) => {
            // Probability 1 marks a certainty unit.
            let (certainty, sampled_units): (Vec<usize>, Vec<usize>) =
                (0..parsed.len()).partition(|&k| parsed[k].is_one());
            let params = if sampled_units.is_empty() {
                None
            } else {
                let probs = sampled_units.iter().map(|&k| parsed[k].clone()).collect();
                Some(validate_params(probs).map_err(|e| remap_unit(e, &sampled_units))?)
            };
            PipsDesign {
                certainty,
                sampled_units,
                params,
            }
        }
    };
    Ok(Prepared {
        ids: pop.ids.clone(),
        design,
    })
}

/// Reports a position among sampled units as a row of the input file.
fn remap_unit(e: chromy_core::Error, sampled: &[usize]) -> chromy_core::Error {
    match e {
        chromy_core::Error::ProbOutOfRange { unit, value } => chromy_core::Error::ProbOutOfRange {
            unit: sampled[unit],
            value,
        },
        other => other,
    }
}

#[derive(Serialize)]
struct SampleSidecar {
    method: SamplerTag,
    seed: u64,
    arithmetic: ArithmeticMode,
    population_size: usize,
    sample_size: usize,
    /// First unit of the circular ordering, for randomized Chromy.
    permutation_start: Option<String>,
    certainty: Vec<String>,
}

pub fn sample<T: Scalar>(
    prepared: &Prepared<T>,
    method: SamplerTag,
    seed: u64,
    output: Option<&Path>,
) -> Result<()> {
    let design = &prepared.design;
    let mut rng = substream(seed, streams::SAMPLE);
    let (positions, start) = match &design.params {
        None => (Vec::new(), None),
        Some(params) => {
            let frame = Frame::new(params.clone());
            let s = match method {
                SamplerTag::Chromy => chromy_sample(&frame, &mut rng)?,
                SamplerTag::RandomizedChromy => randomized_chromy_sample(&frame, &mut rng)?,
                SamplerTag::Pivotal => pivotal_sample(&frame, &mut rng)?,
                SamplerTag::TwoStage => two_stage_sample(&build_clustered(&frame), &frame, &mut rng)?,
            };
            (s.selected, s.permutation_start)
        }
    };
    let mut units: Vec<usize> = positions.iter().map(|&p| design.sampled_units[p]).collect();
    units.extend(&design.certainty);
    units.sort_unstable();
    let rows = prepared.ids_of(&units).into_iter().map(|id| vec![id]);
    io::emit(output, &io::csv_bytes(&["unit_id".to_string()], rows)?)?;
    if let Some(out) = output {
        let sidecar = SampleSidecar {
            method,
            seed,
            arithmetic: T::mode(),
            population_size: prepared.ids.len(),
            sample_size: units.len(),
            permutation_start: start.map(|p| prepared.ids[design.sampled_units[p]].clone()),
            certainty: prepared.ids_of(&design.certainty),
        };
        io::write_atomic(&io::sidecar_path(out), &io::json_bytes(&sidecar)?)?;
    }
    Ok(())
}

/// Full matrix over the population, certainty units included: `pi_kk = 1`
/// and `pi_kl = pi_l` for a certainty unit `k`.
fn expand_matrix<T: Scalar>(prepared: &Prepared<T>, inner: Option<&JointProbabilityMatrix<T>>) -> Vec<T> {
    let len = prepared.ids.len();
    let full_probs = prepared.design.full_probs(len);
    let mut values = vec![T::zero(); len * len];
    let mut position = vec![None; len];
    for (p, &k) in prepared.design.sampled_units.iter().enumerate() {
        position[k] = Some(p);
    }
    for k in 0..len {
        for l in 0..len {
            values[k * len + l] = match (position[k], position[l], inner) {
                (Some(p), Some(q), Some(m)) => m.get(p, q).clone(),
                (None, _, _) => full_probs[l].clone(),
                (_, None, _) => full_probs[k].clone(),
                (Some(_), Some(_), None) => unreachable!("sampled units imply a matrix"),
            };
        }
    }
    values
}

#[derive(Serialize)]
struct MatrixSidecar {
    method: SamplerTag,
    provenance: Provenance,
    arithmetic: ArithmeticMode,
    population_size: usize,
    certainty: Vec<String>,
}

pub fn jip<T: Scalar>(
    prepared: &Prepared<T>,
    method: SamplerTag,
    mc: Option<(u64, u64)>,
    output: Option<&Path>,
) -> Result<()> {
    let inner = match &prepared.design.params {
        None => None,
        Some(params) => Some(match (method, mc) {
            (SamplerTag::RandomizedChromy, None) => randomized_matrix(params),
            (SamplerTag::RandomizedChromy, Some((draws, seed))) => monte_carlo_matrix(params, draws, seed)?,
            (_, Some(_)) => {
                return Err(CliError::Usage("--mc is only available for --method randomized-chromy".into()));
            }
            // The three samplers share one design.
            (SamplerTag::Chromy | SamplerTag::Pivotal | SamplerTag::TwoStage, None) => {
                chromy_matrix(&Frame::new(params.clone()))
            }
        }),
    };
    let provenance = inner.as_ref().map_or(Provenance::ClosedForm, |m| m.provenance());
    let len = prepared.ids.len();
    let values = expand_matrix(prepared, inner.as_ref());
    let mut header = vec!["unit_id".to_string()];
    header.extend(prepared.ids.iter().cloned());
    let rows = (0..len).map(|k| {
        let mut row = vec![prepared.ids[k].clone()];
        row.extend(values[k * len..(k + 1) * len].iter().map(|v| v.to_string()));
        row
    });
    io::emit(output, &io::csv_bytes(&header, rows)?)?;
    if let Some(out) = output {
        let sidecar = MatrixSidecar {
            method,
            provenance,
            arithmetic: T::mode(),
            population_size: len,
            certainty: prepared.ids_of(&prepared.design.certainty),
        };
        io::write_atomic(&io::sidecar_path(out), &io::json_bytes(&sidecar)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct DesignOutput {
    method: SamplerTag,
    population_size: usize,
    /// Comma-joined unit ids of each sample, in population order, mapped to
    /// the exact probability as `p/q`.
    design: serde_json::Map<String, serde_json::Value>,
}

pub fn enumerate(prepared: &Prepared<Exact>, method: SamplerTag, cap: usize, output: Option<&Path>) -> Result<()> {
    let design = &prepared.design;
    let mut entries: Vec<(Vec<usize>, Exact)> = match &design.params {
        None => vec![(Vec::new(), Exact::from_usize(1))],
        Some(params) => chromy_core::enumerate_design_with_cap(method, params, cap)?
            .probs
            .into_iter()
            .map(|(s, p)| (s.into_iter().map(|q| design.sampled_units[q]).collect(), p))
            .collect(),
    };
    for (units, _) in entries.iter_mut() {
        units.extend(&design.certainty);
        units.sort_unstable();
    }
    entries.sort();
    let mut map = serde_json::Map::new();
    for (units, p) in entries {
        map.insert(
            prepared.ids_of(&units).join(","),
            serde_json::Value::String(rational_string(&p)),
        );
    }
    let out = DesignOutput {
        method,
        population_size: prepared.ids.len(),
        design: map,
    };
    io::emit(output, &io::json_bytes(&out)?)
}

/// Always `p/q`, including integers.
fn rational_string(p: &Exact) -> String {
    format!("{}/{}", p.numer(), p.denom())
}

pub fn estimate<T: Scalar>(
    sample_path: &Path,
    values_path: &Path,
    matrix_path: &Path,
    z: f64,
    output: Option<&Path>,
) -> Result<()> {
    let sample_ids = io::read_sample(sample_path)?;
    let values: HashMap<String, T> = io::read_values(values_path)?;
    let (ids, matrix) = io::read_matrix::<T>(matrix_path)?;
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(k, id)| (id.as_str(), k)).collect();
    let mut sample = Vec::with_capacity(sample_ids.len());
    let mut y = vec![T::zero(); ids.len()];
    for id in &sample_ids {
        let k = *index.get(id.as_str()).ok_or_else(|| {
            CliError::Validation(format!("sampled unit {id:?} is not in {}", matrix_path.display()))
        })?;
        y[k] = values
            .get(id)
            .cloned()
            .ok_or_else(|| CliError::Validation(format!("no value for sampled unit {id:?}")))?;
        sample.push(k);
    }
    sample.sort_unstable();
    let record = estimate_record(&sample, &y, &matrix, z)?;
    io::emit(output, &io::json_bytes(&record)?)
}

pub fn simulate(config_path: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(config_path).map_err(|e| CliError::io(config_path, e))?;
    let mut config: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", config_path.display())))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let results = run_experiment(&config)?;
    io::write_atomic(out, &results_csv(&results)?)?;
    #[derive(Serialize)]
    struct Sidecar<'a> {
        config: &'a ExperimentConfig,
        results: &'a ExperimentResults,
    }
    io::write_atomic(
        &io::sidecar_path(out),
        &io::json_bytes(&Sidecar {
            config: &config,
            results: &results,
        })?,
    )
}

fn results_csv(results: &ExperimentResults) -> Result<Vec<u8>> {
    let header: Vec<String> = [
        "n",
        "variable",
        "true_total",
        "true_variance",
        "relative_bias",
        "relative_rmse",
        "lower_tail_error",
        "upper_tail_error",
        "coverage_error",
        "status",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows = results.rows.iter().map(|r| {
        let mut row = vec![
            r.n.to_string(),
            r.variable.name().to_string(),
            r.true_total.to_string(),
            r.true_variance.to_string(),
        ];
        match &r.summary {
            Some(s) => {
                row.extend(
                    [
                        s.relative_bias,
                        s.relative_rmse,
                        s.lower_tail_error,
                        s.upper_tail_error,
                        s.coverage_error,
                    ]
                    .iter()
                    .map(|v| format!("{v:.4}")),
                );
                row.push("ok".into());
            }
            None => {
                row.extend(std::iter::repeat_n(String::new(), 5));
                row.push("excluded: zero true variance".into());
            }
        }
        row
    });
    io::csv_bytes(&header, rows)
}

#[derive(Serialize)]
struct UnitView {
    unit_id: String,
    prob: String,
    /// Cumulative sum through this unit.
    cumulative: String,
    role: &'static str,
    /// Integer boundary for cross-border units, microstratum otherwise.
    index: usize,
}

#[derive(Serialize)]
struct BoundaryView {
    boundary: usize,
    unit_id: String,
    a: String,
    b: String,
}

#[derive(Serialize)]
struct FrameView {
    population_size: usize,
    sample_size: usize,
    certainty: Vec<String>,
    units: Vec<UnitView>,
    boundaries: Vec<BoundaryView>,
}

#[derive(Serialize)]
struct ClusterView {
    cluster: usize,
    kind: &'static str,
    unit_ids: Vec<String>,
    phi: String,
}

#[derive(Serialize)]
struct TransitionView {
    step: usize,
    from: usize,
    to: Vec<(usize, String)>,
}

#[derive(Serialize)]
struct ClustersView {
    clusters: Vec<ClusterView>,
    transitions: Vec<TransitionView>,
}

pub fn inspect<T: Scalar>(prepared: &Prepared<T>, clusters: bool, output: Option<&Path>) -> Result<()> {
    let params = prepared.require_params()?;
    let frame = Frame::new(params.clone());
    let id = |p: usize| prepared.ids[prepared.design.sampled_units[p]].clone();
    let bytes = if clusters {
        let clustered = build_clustered(&frame);
        let table = transition_table(&frame)?;
        let view = ClustersView {
            clusters: clustered
                .clusters()
                .iter()
                .zip(clustered.phi())
                .enumerate()
                .map(|(j, (range, phi))| ClusterView {
                    cluster: j,
                    kind: if j % 2 == 1 { "cross-border" } else { "interior" },
                    unit_ids: range.clone().map(id).collect(),
                    phi: phi.to_string(),
                })
                .collect(),
            transitions: table
                .steps
                .iter()
                .flat_map(|s| {
                    s.rows().map(move |r| TransitionView {
                        step: s.step,
                        from: r.from,
                        to: r.to.iter().map(|(j, p)| (*j, p.to_string())).collect(),
                    })
                })
                .collect(),
        };
        io::json_bytes(&view)?
    } else {
        let cumulative = &frame.profile().cumulative;
        let view = FrameView {
            population_size: prepared.ids.len(),
            sample_size: params.n() + prepared.design.certainty.len(),
            certainty: prepared.ids_of(&prepared.design.certainty),
            units: (0..frame.len())
                .map(|p| {
                    let (role, index) = match frame.role(p) {
                        UnitRole::CrossBorder(i) => ("cross-border", i),
                        UnitRole::Interior(i) => ("interior", i),
                    };
                    UnitView {
                        unit_id: id(p),
                        prob: frame.prob(p).to_string(),
                        cumulative: cumulative[p + 1].to_string(),
                        role,
                        index,
                    }
                })
                .collect(),
            boundaries: frame
                .cross_border()
                .iter()
                .enumerate()
                .map(|(i, &k)| BoundaryView {
                    boundary: i + 1,
                    unit_id: id(k),
                    a: frame.a(i + 1).to_string(),
                    b: frame.b(i + 1).to_string(),
                })
                .collect(),
        };
        io::json_bytes(&view)?
    };
    io::emit(output, &bytes)
}
