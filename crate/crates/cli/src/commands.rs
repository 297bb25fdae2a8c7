//! Subcommand implementations.
//!
//! Each command turns one loaded scenario into a single [`Table`]. Sweeps
//! are dispatched to the rayon worker pool; results are collected in sweep
//! order, so the output bytes do not depend on the thread count. Nothing
//! is written until a command finishes, which keeps validation failures
//! from leaving partial files behind.
//!
//! Exit-code mapping (applied by `main`): configuration problems are
//! [`CliError::Validation`] (exit 2), solver or numerical failures are
//! [`CliError::Runtime`] (exit 4), and an energy-efficiency sweep whose
//! every point is infeasible sets the `all_infeasible` flag (exit 3 after
//! the table is still written, so the evidence survives).
//!
//! The spectral-efficiency and tightness commands ignore any
//! `se_threshold_bits_per_s_per_hz` in the sweep: the threshold only
//! shapes the energy-efficiency problem.

use crate::output::{fmt_f64, Table};
use crate::scenario::{Budget, Scenario, SweepPoint};
use lightlink_core::barrier::SolveStatus;
use lightlink_core::ee::solve_ee;
use lightlink_core::rates::{RateContext, RateMetric};
use lightlink_core::se::{simulate_time_domain, solve_se, solve_se_exact, SeSolution};
use rayon::prelude::*;
use std::time::Instant;

/// Errors that abort a command before any output is written.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments; exit code 2.
    Validation(String),
    /// Solver or numerical failure at runtime; exit code 4.
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(msg) | CliError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

/// A finished command: the table plus the one flag that changes the exit
/// code after a successful write.
#[derive(Debug)]
pub struct CommandOutput {
    /// The assembled CSV.
    pub table: Table,
    /// True when an energy-efficiency sweep had points but satisfied none.
    pub all_infeasible: bool,
}

impl CommandOutput {
    fn done(table: Table) -> Self {
        Self {
            table,
            all_infeasible: false,
        }
    }
}

/// Lowercase status label for CSV cells.
fn status_str(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Converged => "converged",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::MaxIter => "max_iter",
    }
}

/// Budget cell: the cap in watts or `inf`.
fn budget_str(budget: Budget) -> String {
    match budget {
        Budget::Finite(v) => fmt_f64(v),
        Budget::Unbounded { .. } => "inf".to_string(),
    }
}

/// Powers joined with `;` so the allocation fits one CSV cell.
fn powers_str(powers: &[f64]) -> String {
    powers
        .iter()
        .map(|&p| fmt_f64(p))
        .collect::<Vec<_>>()
        .join(";")
}

/// Stamps the provenance lines shared by every command. The thread count
/// and output path are deliberately absent: they must not change the
/// bytes.
fn stamp(table: &mut Table, scenario: &Scenario, command: &str, metric: Option<RateMetric>) {
    table.meta("scenario_sha256", scenario.sha256());
    table.meta("command", command);
    if let Some(metric) = metric {
        table.meta("metric", metric);
    }
    table.meta("seed", scenario.solver.seed);
    table.meta("quad_order", scenario.solver.quad_order);
}

/// Rate contexts for the scenario's own link size.
fn contexts(scenario: &Scenario) -> Result<Vec<RateContext>, CliError> {
    scenario
        .rate_contexts_for(scenario.system.half_subcarriers, scenario.solver.quad_order)
        .map_err(CliError::Validation)
}

/// Solves one spectral-efficiency point with the metric-appropriate solver:
/// interior point for the concave bounds, mercury-water-filling for the
/// exact metric.
fn solve_point(
    contexts: &[RateContext],
    metric: RateMetric,
    point: &SweepPoint,
    scenario: &Scenario,
) -> Result<SeSolution, CliError> {
    let budgets = point.budgets().map_err(CliError::Validation)?;
    let options = scenario.se_options();
    let solution = match metric {
        RateMetric::Exact => solve_se_exact(contexts, budgets, &options),
        _ => solve_se(contexts, metric, budgets, &options),
    };
    solution.map_err(|e| CliError::Runtime(e.to_string()))
}

/// `channel`: frequency response of the scenario link, one row per data
/// subcarrier.
pub fn cmd_channel(scenario: &Scenario) -> Result<CommandOutput, CliError> {
    let gains = scenario
        .channel_gains_for(scenario.system.half_subcarriers)
        .map_err(CliError::Validation)?;
    let mut table = Table::new(&["subcarrier", "gain_magnitude", "gain_phase_rad"]);
    stamp(&mut table, scenario, "channel", None);
    for (j, h) in gains.data_gains().iter().enumerate() {
        table.push_row(vec![
            (j + 1).to_string(),
            fmt_f64(h.norm()),
            fmt_f64(h.arg()),
        ]);
    }
    Ok(CommandOutput::done(table))
}

/// `rate-curves`: the three rate metrics and the exact-rate gradient on a
/// power grid, for the requested data subcarriers.
pub fn cmd_rate_curves(
    scenario: &Scenario,
    subcarriers: &[usize],
    power_min_w: f64,
    power_max_w: f64,
    power_points: usize,
) -> Result<CommandOutput, CliError> {
    let n_half = scenario.system.half_subcarriers;
    if subcarriers.is_empty() {
        return Err(CliError::Validation(
            "at least one subcarrier index is required".to_string(),
        ));
    }
    for &i in subcarriers {
        if i == 0 || i >= n_half {
            return Err(CliError::Validation(format!(
                "subcarrier {i} does not carry data; valid indices are 1..{}",
                n_half - 1
            )));
        }
    }
    if !(power_min_w >= 0.0) || !(power_max_w > power_min_w) || !power_max_w.is_finite() {
        return Err(CliError::Validation(format!(
            "power grid must satisfy 0 <= min < max, got [{power_min_w}, {power_max_w}]"
        )));
    }
    if power_points < 2 {
        return Err(CliError::Validation(format!(
            "power grid needs at least 2 points, got {power_points}"
        )));
    }
    let all_contexts = contexts(scenario)?;
    let step = (power_max_w - power_min_w) / (power_points - 1) as f64;
    let tasks: Vec<(usize, f64)> = subcarriers
        .iter()
        .flat_map(|&i| (0..power_points).map(move |g| (i, power_min_w + step * g as f64)))
        .collect();
    let rows: Vec<Vec<String>> = tasks
        .par_iter()
        .map(|&(i, p)| {
            let ctx = &all_contexts[i - 1];
            vec![
                i.to_string(),
                fmt_f64(p),
                fmt_f64(ctx.rate_exact(p)),
                fmt_f64(ctx.rate_lower(p)),
                fmt_f64(ctx.rate_approx(p)),
                fmt_f64(ctx.rate_exact_gradient(p)),
            ]
        })
        .collect();
    let mut table = Table::new(&[
        "subcarrier",
        "power_w",
        "rate_exact_bits_per_s",
        "rate_lower_bits_per_s",
        "rate_approx_bits_per_s",
        "rate_exact_gradient_bits_per_s_per_w",
    ]);
    stamp(&mut table, scenario, "rate-curves", None);
    for row in rows {
        table.push_row(row);
    }
    Ok(CommandOutput::done(table))
}

/// `se`: maximum spectral efficiency at every sweep point.
pub fn cmd_se(scenario: &Scenario, metric: RateMetric) -> Result<CommandOutput, CliError> {
    let all_contexts = contexts(scenario)?;
    let rows: Result<Vec<Vec<String>>, CliError> = scenario
        .sweep
        .par_iter()
        .enumerate()
        .map(|(idx, point)| {
            let solution = solve_point(&all_contexts, metric, point, scenario)?;
            Ok(vec![
                idx.to_string(),
                budget_str(point.optical_budget_w),
                budget_str(point.electrical_budget_w),
                fmt_f64(solution.se_bits_per_s_per_hz),
                fmt_f64(solution.allocation.powers().iter().sum()),
                fmt_f64(solution.allocation.i_dc()),
                fmt_f64(solution.allocation.total_electrical_power_w()),
                fmt_f64(solution.dual_optical),
                fmt_f64(solution.dual_electrical),
                fmt_f64(solution.kkt_residual),
                solution.iterations.to_string(),
                status_str(solution.status).to_string(),
                powers_str(solution.allocation.powers()),
            ])
        })
        .collect();
    let mut table = Table::new(&[
        "point",
        "optical_budget_w",
        "electrical_budget_w",
        "se_bits_per_s_per_hz",
        "sum_power_w",
        "dc_bias_w",
        "total_electrical_power_w",
        "dual_optical",
        "dual_electrical",
        "kkt_residual",
        "iterations",
        "status",
        "powers_w",
    ]);
    stamp(&mut table, scenario, "se", Some(metric));
    for row in rows? {
        table.push_row(row);
    }
    Ok(CommandOutput::done(table))
}

/// `ee`: maximum energy efficiency at every sweep point, honoring each
/// point's spectral-efficiency threshold. Infeasible points become rows,
/// not errors; if every point is infeasible the output still gets written
/// and the process exits with code 3.
pub fn cmd_ee(scenario: &Scenario, metric: RateMetric) -> Result<CommandOutput, CliError> {
    let all_contexts = contexts(scenario)?;
    let options = scenario.ee_options();
    let rows: Result<Vec<(bool, Vec<String>)>, CliError> = scenario
        .sweep
        .par_iter()
        .enumerate()
        .map(|(idx, point)| {
            let budgets = point.budgets().map_err(CliError::Validation)?;
            let report = solve_ee(
                &all_contexts,
                metric,
                budgets,
                scenario.system.circuit_power_w,
                point.se_threshold_bits_per_s_per_hz,
                &options,
            )
            .map_err(|e| CliError::Runtime(e.to_string()))?;
            let infeasible = report.status == SolveStatus::Infeasible;
            let row = vec![
                idx.to_string(),
                budget_str(point.optical_budget_w),
                budget_str(point.electrical_budget_w),
                fmt_f64(point.se_threshold_bits_per_s_per_hz),
                fmt_f64(report.ee_bits_per_joule),
                fmt_f64(report.se_bits_per_s_per_hz),
                fmt_f64(report.allocation.powers().iter().sum()),
                report.iterations.to_string(),
                report.q_trace_bits_per_joule.len().to_string(),
                fmt_f64(report.root_residual_bits_per_s),
                status_str(report.status).to_string(),
                powers_str(report.allocation.powers()),
            ];
            Ok((infeasible, row))
        })
        .collect();
    let rows = rows?;
    let all_infeasible = !rows.is_empty() && rows.iter().all(|(infeasible, _)| *infeasible);
    let mut table = Table::new(&[
        "point",
        "optical_budget_w",
        "electrical_budget_w",
        "se_threshold_bits_per_s_per_hz",
        "ee_bits_per_joule",
        "se_bits_per_s_per_hz",
        "sum_power_w",
        "ratio_iterations",
        "trace_length",
        "root_residual_bits_per_s",
        "status",
        "powers_w",
    ]);
    stamp(&mut table, scenario, "ee", Some(metric));
    for (_, row) in rows {
        table.push_row(row);
    }
    Ok(CommandOutput {
        table,
        all_infeasible,
    })
}

/// `verify-tightness`: solves each sweep point, then replays the
/// allocation through a time-domain Monte-Carlo draw and reports how
/// close the simulated moments come to the caps the solver enforced,
/// plus the clipping count (which the bias construction keeps at zero).
pub fn cmd_verify_tightness(
    scenario: &Scenario,
    metric: RateMetric,
) -> Result<CommandOutput, CliError> {
    let all_contexts = contexts(scenario)?;
    let constellation = scenario.constellation();
    let trials = scenario.solver.tightness_trials;
    let seed = scenario.solver.seed;
    if trials < 10_000 {
        return Err(CliError::Validation(format!(
            "tightness_trials must be at least 10000 for stable moments, got {trials}"
        )));
    }
    let rows: Result<Vec<Vec<String>>, CliError> = scenario
        .sweep
        .par_iter()
        .enumerate()
        .map(|(idx, point)| {
            let solution = solve_point(&all_contexts, metric, point, scenario)?;
            let stats =
                simulate_time_domain(&solution.allocation, &constellation, trials, seed);
            let optical_cap = match point.optical_budget_w {
                Budget::Finite(v) => v,
                Budget::Unbounded { .. } => f64::INFINITY,
            };
            let electrical_cap = match point.electrical_budget_w {
                Budget::Finite(v) => v,
                Budget::Unbounded { .. } => f64::INFINITY,
            };
            Ok(vec![
                idx.to_string(),
                budget_str(point.optical_budget_w),
                budget_str(point.electrical_budget_w),
                fmt_f64(solution.allocation.i_dc()),
                fmt_f64(stats.mean_biased_sample_w),
                fmt_f64(stats.mean_biased_sample_w / optical_cap),
                fmt_f64(stats.sum_mean_square_w),
                fmt_f64(stats.sum_mean_square_w / electrical_cap),
                fmt_f64(stats.min_biased_sample_w),
                stats.clipped_samples.to_string(),
                stats.trials.to_string(),
            ])
        })
        .collect();
    let mut table = Table::new(&[
        "point",
        "optical_budget_w",
        "electrical_budget_w",
        "dc_bias_w",
        "mean_biased_sample_w",
        "optical_budget_fraction",
        "sum_mean_square_w",
        "electrical_budget_fraction",
        "min_biased_sample_w",
        "clipped_samples",
        "trials",
    ]);
    stamp(&mut table, scenario, "verify-tightness", Some(metric));
    for row in rows? {
        table.push_row(row);
    }
    Ok(CommandOutput::done(table))
}

/// `bench`: wall-clock comparison of the exact-metric solver against the
/// approximation-metric solver as the link grows. Budgets come from the
/// scenario's first sweep point; each solver runs twice so the table can
/// certify determinism, and timings are reported without assertion since
/// they are machine-dependent.
pub fn cmd_bench(scenario: &Scenario) -> Result<CommandOutput, CliError> {
    let point = scenario.sweep.first().ok_or_else(|| {
        CliError::Validation("bench needs at least one sweep point for budgets".to_string())
    })?;
    let budgets = point.budgets().map_err(CliError::Validation)?;
    let options = scenario.se_options();
    let mut table = Table::new(&[
        "half_subcarriers",
        "approx_seconds",
        "exact_seconds",
        "approx_faster",
        "deterministic",
        "se_approx_bits_per_s_per_hz",
        "se_exact_bits_per_s_per_hz",
    ]);
    stamp(&mut table, scenario, "bench", None);
    for n_half in [4usize, 8, 16] {
        let link = scenario
            .rate_contexts_for(n_half, scenario.solver.quad_order)
            .map_err(CliError::Validation)?;
        let run_approx = || -> Result<(SeSolution, f64), CliError> {
            let start = Instant::now();
            let solution = solve_se(&link, RateMetric::Approx, budgets, &options)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            Ok((solution, start.elapsed().as_secs_f64()))
        };
        let run_exact = || -> Result<(SeSolution, f64), CliError> {
            let start = Instant::now();
            let solution = solve_se_exact(&link, budgets, &options)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            Ok((solution, start.elapsed().as_secs_f64()))
        };
        let (approx_a, approx_seconds) = run_approx()?;
        let (approx_b, _) = run_approx()?;
        let (exact_a, exact_seconds) = run_exact()?;
        let (exact_b, _) = run_exact()?;
        let deterministic = approx_a.allocation.powers() == approx_b.allocation.powers()
            && exact_a.allocation.powers() == exact_b.allocation.powers();
        table.push_row(vec![
            n_half.to_string(),
            fmt_f64(approx_seconds),
            fmt_f64(exact_seconds),
            (exact_seconds > approx_seconds).to_string(),
            deterministic.to_string(),
            fmt_f64(approx_a.se_bits_per_s_per_hz),
            fmt_f64(exact_a.se_bits_per_s_per_hz),
        ]);
    }
    Ok(CommandOutput::done(table))
}
