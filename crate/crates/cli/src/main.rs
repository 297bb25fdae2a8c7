//! `lightlink`: experiment harness for finite-alphabet optical OFDM power
//! allocation.
//!
//! Every run loads one scenario file, executes one subcommand, and emits
//! one CSV (to `--out` or stdout). Command-line overrides exist only for
//! the numerical knobs that do not change the physics (`--seed`,
//! `--quad-order`, `--jobs`); everything else lives in the scenario so
//! results stay reproducible from the file alone.
//!
//! Exit codes: 0 success, 2 validation or argument error, 3 when an
//! energy-efficiency sweep had points but satisfied none, 4 solver or
//! numerical failure.

mod commands;
mod output;
mod scenario;

use clap::{Parser, Subcommand, ValueEnum};
use commands::{CliError, CommandOutput};
use lightlink_core::rates::RateMetric;
use scenario::Scenario;
use std::path::PathBuf;

/// Rate metric selector shared by the solver-facing subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    /// Finite-alphabet mutual information (quadrature).
    Exact,
    /// Closed-form lower bound.
    Lower,
    /// Lower bound plus the constant gap.
    Approx,
}

impl From<MetricArg> for RateMetric {
    fn from(arg: MetricArg) -> Self {
        match arg {
            MetricArg::Exact => RateMetric::Exact,
            MetricArg::Lower => RateMetric::LowerBound,
            MetricArg::Approx => RateMetric::Approx,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "lightlink",
    version,
    about = "Finite-alphabet rates and power allocation for optical OFDM links"
)]
struct Cli {
    /// Scenario file (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    scenario: Option<PathBuf>,
    /// Output CSV path; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override the scenario's seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Override the scenario's Gauss-Hermite order.
    #[arg(long, global = true, value_name = "N")]
    quad_order: Option<usize>,
    /// Worker threads for sweeps; 0 or omitted picks the CPU count.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Frequency response of the link, one row per data subcarrier.
    Channel,
    /// Rate metrics and the exact-rate gradient on a power grid.
    RateCurves {
        /// Data subcarrier indices, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,15")]
        subcarriers: Vec<usize>,
        /// Lowest grid power in watts.
        #[arg(long, default_value_t = 0.0)]
        power_min_w: f64,
        /// Highest grid power in watts.
        #[arg(long, default_value_t = 0.02)]
        power_max_w: f64,
        /// Grid size.
        #[arg(long, default_value_t = 101)]
        power_points: usize,
    },
    /// Maximum spectral efficiency at every sweep point.
    Se {
        /// Rate metric to optimize.
        #[arg(long, value_enum, default_value_t = MetricArg::Exact)]
        metric: MetricArg,
    },
    /// Maximum energy efficiency at every sweep point.
    Ee {
        /// Rate metric to optimize.
        #[arg(long, value_enum, default_value_t = MetricArg::Approx)]
        metric: MetricArg,
    },
    /// Monte-Carlo check that solved allocations respect the power caps.
    VerifyTightness {
        /// Rate metric whose allocation is replayed.
        #[arg(long, value_enum, default_value_t = MetricArg::Lower)]
        metric: MetricArg,
    },
    /// Wall-clock comparison of the exact and approximate solvers.
    Bench,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(4);
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build_global()
                .map_err(|e| CliError::Runtime(format!("cannot size worker pool: {e}")))?;
        }
    }
    let path = cli
        .scenario
        .as_deref()
        .ok_or_else(|| CliError::Validation("--scenario <PATH> is required".to_string()))?;
    let mut scenario = Scenario::load(path).map_err(CliError::Validation)?;
    if let Some(seed) = cli.seed {
        scenario.solver.seed = seed;
    }
    if let Some(order) = cli.quad_order {
        scenario.solver.quad_order = order;
        scenario.validate().map_err(CliError::Validation)?;
    }
    let CommandOutput {
        table,
        all_infeasible,
    } = match &cli.command {
        Command::Channel => commands::cmd_channel(&scenario)?,
        Command::RateCurves {
            subcarriers,
            power_min_w,
            power_max_w,
            power_points,
        } => commands::cmd_rate_curves(
            &scenario,
            subcarriers,
            *power_min_w,
            *power_max_w,
            *power_points,
        )?,
        Command::Se { metric } => commands::cmd_se(&scenario, (*metric).into())?,
        Command::Ee { metric } => commands::cmd_ee(&scenario, (*metric).into())?,
        Command::VerifyTightness { metric } => {
            commands::cmd_verify_tightness(&scenario, (*metric).into())?
        }
        Command::Bench => commands::cmd_bench(&scenario)?,
    };
    table
        .write(cli.out.as_deref())
        .map_err(|e| CliError::Runtime(format!("cannot write output: {e}")))?;
    Ok(if all_infeasible { 3 } else { 0 })
}
