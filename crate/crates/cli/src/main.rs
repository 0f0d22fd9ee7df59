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


mod commands;
mod error;
mod io;

use chromy_core::{ArithmeticMode, Exact, SamplerTag, Z_95};
use clap::{Args, Parser, Subcommand, ValueEnum};
use error::{CliError, Result};
use rand::Rng;
use std::path::PathBuf;

const FORMATS: &str = "\
File formats:
  population CSV   header `unit_id,prob` (inclusion probabilities in (0, 1],
                   1 marking a certainty unit) or `unit_id,size` (positive
                   size measures, with --sample-size). Values may be decimals
                   or fractions `p/q`; rational mode keeps them exact.
  sample CSV       header `unit_id`, one selected unit per row. A JSON
                   sidecar `<output>.json` records method, seed, arithmetic,
                   certainty units and the permutation start.
  values CSV       header `unit_id,value`.
  matrix CSV       header `unit_id,<id>,...`; row k holds pi_kl for every l,
                   with pi_k on the diagonal. Sidecar `<output>.json` records
                   how the matrix was obtained.
  design JSON      {\"method\", \"population_size\", \"design\"}, where design
                   maps comma-joined sorted unit ids to probabilities `p/q`.
  estimate JSON    {\"ht\", \"syg_var\", \"ci_low\", \"ci_high\"}.
  experiment JSON  {\"population\": {\"size\", \"x_law\": {\"law\": \"gamma\",
                   \"shape\", \"scale\"} | {\"law\": \"lognormal\", \"mu\",
                   \"sigma\"}, \"models\" (optional), \"seed\"},
                   \"sample_sizes\", \"replicates\", \"seed\", \"z\" (optional),
                   \"exact_threshold\" (optional), \"mc_draws\" (optional)}.

Exit status: 0 success, 1 invalid input, 2 usage error, 3 I/O error. Errors
are printed on stderr as one JSON object.";

#[derive(Parser)]
#[command(
    name = "chromy",
    version,
    about = "Chromy, randomized Chromy and ordered pivotal sampling, with exact joint inclusion probabilities",
    after_long_help = FORMATS
)]
struct Cli {
    /// Master seed. Without it a seed is drawn from the OS and printed on
    /// stderr.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Exact rational arithmetic.
    #[arg(long, global = true, conflicts_with = "float")]
    rational: bool,
    /// Double-precision arithmetic.
    #[arg(long, global = true)]
    float: bool,
    /// Worker threads for matrix and replicate computations (default: all
    /// cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Chromy,
    RandomizedChromy,
    Pivotal,
    TwoStage,
}

impl From<Method> for SamplerTag {
    fn from(m: Method) -> Self {
        match m {
            Method::Chromy => SamplerTag::Chromy,
            Method::RandomizedChromy => SamplerTag::RandomizedChromy,
            Method::Pivotal => SamplerTag::Pivotal,
            Method::TwoStage => SamplerTag::TwoStage,
        }
    }
}

#[derive(Args)]
struct PopulationArgs {
    /// Population CSV.
    #[arg(short, long)]
    input: PathBuf,
    /// Sample size for a `unit_id,size` population; probabilities are then
    /// proportional to size, with certainty units set aside.
    #[arg(long)]
    sample_size: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one sample.
    Sample {
        #[command(flatten)]
        population: PopulationArgs,
        #[arg(long, value_enum, default_value = "chromy")]
        method: Method,
        /// Sample CSV (stdout if absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Joint inclusion probability matrix.
    Jip {
        #[command(flatten)]
        population: PopulationArgs,
        #[arg(long, value_enum, default_value = "randomized-chromy")]
        method: Method,
        /// Closed-form matrix (the default).
        #[arg(long, conflicts_with = "mc")]
        exact: bool,
        /// Monte-Carlo matrix from this many randomized Chromy draws.
        #[arg(long, value_name = "DRAWS")]
        mc: Option<u64>,
        /// Matrix CSV (stdout if absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exact sampling design of a small population (rational arithmetic).
    Enumerate {
        #[command(flatten)]
        population: PopulationArgs,
        #[arg(long, value_enum, default_value = "chromy")]
        method: Method,
        /// Largest population to enumerate.
        #[arg(long, default_value_t = chromy_core::oracle::DEFAULT_ENUMERATION_CAP)]
        cap: usize,
        /// Design JSON (stdout if absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Horvitz-Thompson estimate with Sen-Yates-Grundy variance and interval.
    Estimate {
        /// Sample CSV.
        #[arg(long)]
        sample: PathBuf,
        /// Values CSV.
        #[arg(long)]
        values: PathBuf,
        /// Matrix CSV; the diagonal gives the inclusion probabilities.
        #[arg(long)]
        matrix: PathBuf,
        /// Normal quantile of the interval.
        #[arg(long, default_value_t = Z_95)]
        z: f64,
        /// Estimate JSON (stdout if absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Monte-Carlo study of variance estimation under randomized Chromy
    /// sampling. --seed overrides the replicate seed of the config.
    Simulate {
        /// Experiment JSON.
        #[arg(long)]
        config: PathBuf,
        /// Results CSV, with the full results in `<out>.json`.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Frame or clustered-population details as JSON.
    Inspect {
        #[command(flatten)]
        population: PopulationArgs,
        /// Clusters and transition probabilities instead of the frame.
        #[arg(long)]
        clusters: bool,
        /// JSON output (stdout if absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s: u64 = rand::rng().random();
        eprintln!("seed {s}");
        s
    })
}

fn mode(cli: &Cli, default: ArithmeticMode) -> ArithmeticMode {
    if cli.rational {
        ArithmeticMode::ExactRational
    } else if cli.float {
        ArithmeticMode::Float64
    } else {
        default
    }
}

macro_rules! with_scalar {
    ($mode:expr, $t:ident => $body:expr) => {
        match $mode {
            ArithmeticMode::Float64 => {
                type $t = f64;
                $body
            }
            ArithmeticMode::ExactRational => {
                type $t = Exact;
                $body
            }
        }
    };
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    let float = mode(&cli, ArithmeticMode::Float64);
    match &cli.command {
        Command::Sample {
            population,
            method,
            output,
        } => {
            let pop = io::read_population(&population.input)?;
            let seed = resolve_seed(cli.seed);
            with_scalar!(float, T => {
                let prepared = commands::prepare::<T>(&pop, population.sample_size)?;
                commands::sample(&prepared, (*method).into(), seed, output.as_deref())
            })
        }
        Command::Jip {
            population,
            method,
            exact: _,
            mc,
            output,
        } => {
            let pop = io::read_population(&population.input)?;
            let mc = mc.map(|draws| (draws, resolve_seed(cli.seed)));
            with_scalar!(float, T => {
                let prepared = commands::prepare::<T>(&pop, population.sample_size)?;
                commands::jip(&prepared, (*method).into(), mc, output.as_deref())
            })
        }
        Command::Enumerate {
            population,
            method,
            cap,
            output,
        } => {
            if cli.float {
                return Err(CliError::Usage("enumerate works in rational arithmetic only".into()));
            }
            let pop = io::read_population(&population.input)?;
            let prepared = commands::prepare::<Exact>(&pop, population.sample_size)?;
            commands::enumerate(&prepared, (*method).into(), *cap, output.as_deref())
        }
        Command::Estimate {
            sample,
            values,
            matrix,
            z,
            output,
        } => {
            if !(*z > 0.0) {
                return Err(CliError::Usage(format!("--z must be positive, got {z}")));
            }
            with_scalar!(float, T => commands::estimate::<T>(sample, values, matrix, *z, output.as_deref()))
        }
        Command::Simulate { config, out } => commands::simulate(config, cli.seed, out),
        Command::Inspect {
            population,
            clusters,
            output,
        } => {
            let pop = io::read_population(&population.input)?;
            with_scalar!(mode(&cli, ArithmeticMode::ExactRational), T => {
                let prepared = commands::prepare::<T>(&pop, population.sample_size)?;
                commands::inspect(&prepared, *clusters, output.as_deref())
            })
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => fail(CliError::Usage(e.to_string().trim_end().to_string())),
    };
    if let Err(e) = run(cli) {
        fail(e);
    }
}

fn fail(e: CliError) -> ! {
    eprintln!("{}", e.to_json());
    std::process::exit(e.exit_code());
}

