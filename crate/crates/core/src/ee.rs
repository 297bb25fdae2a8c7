//! Energy-efficiency power allocation via Dinkelbach iterations.
//!
//! Energy efficiency is throughput per watt of total consumed power. The
//! consumed power combines the information power `2 sum_i p_i`, the DC-bias
//! power `2N I_dc^2`, and a constant circuit draw `P_c`. Because the bias
//! power is not concave-friendly, the solved model replaces it by its
//! Cauchy-Schwarz majorant, giving the linear denominator
//! `(4N - 2) sum_i p_i + P_c`; the exact denominator stays available as a
//! diagnostic. The majorant overestimates the bias power, so the solved
//! ("bound") EE never exceeds the diagnostic EE.
//!
//! [`solve_ee`] maximizes the resulting concave/linear fractional program
//! with the standard Dinkelbach scheme: starting from ratio `q = 0`, it
//! repeatedly maximizes `throughput - q * denominator` over the feasible
//! set (budgets plus an optional minimum spectral efficiency) and updates
//! `q` to the achieved ratio, which converges monotonically. The iteration
//! works on the bandwidth-normalized ratio so the stopping tolerance is
//! meaningful regardless of the absolute rate scale; reported efficiencies
//! are in bits per joule.

use crate::barrier::{
    self, BarrierError, ConcaveSeparable, FeasibleSet, SolveStatus, SuperlevelConstraint,
};
use crate::rates::{RateContext, RateMetric};
use crate::se::{self, Budgets, PowerAllocation, RateObjective, SeError, SeOptions};
use thiserror::Error;

/// Default stopping tolerance on the normalized Dinkelbach ratio.
pub const DEFAULT_RATIO_TOL: f64 = 1e-8;
/// Default cap on Dinkelbach iterations.
pub const DEFAULT_MAX_ITERATIONS: usize = 100;

/// Errors from energy-efficiency evaluation or solving.
#[derive(Debug, Error)]
pub enum EeError {
    /// Circuit power or threshold is malformed.
    #[error("invalid energy-efficiency configuration: {0}")]
    InvalidConfig(String),
    /// The link or budgets were rejected by the spectral-efficiency layer.
    #[error(transparent)]
    Se(#[from] SeError),
    /// The optimizer rejected a subproblem.
    #[error(transparent)]
    Solver(#[from] BarrierError),
}

/// Solver knobs for [`solve_ee`].
#[derive(Debug, Clone, Copy)]
pub struct EeOptions {
    /// Inner spectral-efficiency/barrier options.
    pub se: SeOptions,
    /// Stop once the normalized ratio moves by no more than this.
    pub ratio_tol: f64,
    /// Iteration cap (the scheme converges superlinearly; hitting the cap
    /// signals trouble).
    pub max_iterations: usize,
}

impl Default for EeOptions {
    fn default() -> Self {
        Self {
            se: SeOptions::default(),
            ratio_tol: DEFAULT_RATIO_TOL,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Outcome of an energy-efficiency solve.
#[derive(Debug, Clone)]
pub struct EeReport {
    /// Final powers with bias accounting.
    pub allocation: PowerAllocation,
    /// Achieved energy efficiency (bits per joule) under the linear-bound
    /// denominator, i.e. the maximized objective.
    pub ee_bits_per_joule: f64,
    /// Spectral efficiency of the final allocation (bits/s/Hz).
    pub se_bits_per_s_per_hz: f64,
    /// Ratio trace in bits per joule, one entry per Dinkelbach iteration;
    /// non-decreasing within solver tolerance.
    pub q_trace_bits_per_joule: Vec<f64>,
    /// Residual of the Dinkelbach root equation
    /// `throughput - q * denominator` at the final iterate, in bits/s.
    pub root_residual_bits_per_s: f64,
    /// Dinkelbach iterations performed.
    pub iterations: usize,
    /// How the solve ended.
    pub status: SolveStatus,
}

/// Dinkelbach subproblem objective: normalized rates minus the linear
/// denominator charge `q (4N - 2) p_i` per coordinate.
struct RatioSurplus<'a> {
    rates: RateObjective<'a>,
    charge_per_watt: f64,
}

impl ConcaveSeparable for RatioSurplus<'_> {
    fn len(&self) -> usize {
        self.rates.len()
    }
    fn value(&self, i: usize, p: f64) -> f64 {
        self.rates.value(i, p) - self.charge_per_watt * p
    }
    fn gradient(&self, i: usize, p: f64) -> f64 {
        self.rates.gradient(i, p) - self.charge_per_watt
    }
    fn curvature(&self, i: usize, p: f64) -> f64 {
        self.rates.curvature(i, p)
    }
}

/// Shape data shared by the EE entry points.
fn link_shape(contexts: &[RateContext]) -> Result<(usize, f64), EeError> {
    if contexts.is_empty() {
        return Err(EeError::InvalidConfig(
            "at least one data subcarrier required".to_string(),
        ));
    }
    Ok((contexts.len() + 1, contexts[0].bandwidth_hz()))
}

/// Summed rate over the data subcarriers in bits/s.
fn total_rate(contexts: &[RateContext], metric: RateMetric, powers: &[f64]) -> f64 {
    contexts
        .iter()
        .zip(powers)
        .map(|(ctx, &p)| ctx.rate(metric, p))
        .sum()
}

/// Energy efficiency (bits per joule) under the solved linear-bound
/// denominator `(4N - 2) sum_i p_i + P_c`.
pub fn evaluate_ee(
    contexts: &[RateContext],
    metric: RateMetric,
    powers: &[f64],
    circuit_power_w: f64,
) -> Result<f64, EeError> {
    let (n_half, _) = link_shape(contexts)?;
    check_circuit_power(circuit_power_w)?;
    if powers.len() != contexts.len() {
        return Err(EeError::InvalidConfig(format!(
            "{} powers for {} subcarriers",
            powers.len(),
            contexts.len()
        )));
    }
    let denominator =
        (4.0 * n_half as f64 - 2.0) * powers.iter().sum::<f64>() + circuit_power_w;
    Ok(total_rate(contexts, metric, powers) / denominator)
}

/// Diagnostic energy efficiency with the exact denominator
/// `2 sum_i p_i + 2N I_dc^2 + P_c`; at least as large as [`evaluate_ee`]
/// because the solved model majorizes the bias power.
pub fn evaluate_ee_diagnostic(
    contexts: &[RateContext],
    metric: RateMetric,
    allocation: &PowerAllocation,
    circuit_power_w: f64,
) -> Result<f64, EeError> {
    link_shape(contexts)?;
    check_circuit_power(circuit_power_w)?;
    if allocation.powers().len() != contexts.len() {
        return Err(EeError::InvalidConfig(format!(
            "{} powers for {} subcarriers",
            allocation.powers().len(),
            contexts.len()
        )));
    }
    let denominator = allocation.total_electrical_power_w() + circuit_power_w;
    Ok(total_rate(contexts, metric, allocation.powers()) / denominator)
}

fn check_circuit_power(circuit_power_w: f64) -> Result<(), EeError> {
    if !(circuit_power_w > 0.0) || !circuit_power_w.is_finite() {
        return Err(EeError::InvalidConfig(format!(
            "circuit power must be positive and finite, got {circuit_power_w}"
        )));
    }
    Ok(())
}

/// Maximizes energy efficiency under power budgets and a minimum spectral
/// efficiency `se_threshold` (bits/s/Hz; zero disables the constraint).
///
/// A phase-I spectral-efficiency maximization certifies feasibility (and
/// warm-starts the first subproblem); if even the maximum achievable SE
/// falls short of the threshold the report comes back `Infeasible` without
/// entering the ratio iteration.
pub fn solve_ee(
    contexts: &[RateContext],
    metric: RateMetric,
    budgets: Budgets,
    circuit_power_w: f64,
    se_threshold: f64,
    options: &EeOptions,
) -> Result<EeReport, EeError> {
    let (n_half, bandwidth) = link_shape(contexts)?;
    check_circuit_power(circuit_power_w)?;
    if !se_threshold.is_finite() || se_threshold < 0.0 {
        return Err(EeError::InvalidConfig(format!(
            "spectral-efficiency threshold must be finite and non-negative, got {se_threshold}"
        )));
    }
    let band = 2.0 * n_half as f64 * bandwidth;
    let scale = 1.0 / band;
    let charge_slope = 4.0 * n_half as f64 - 2.0;
    let denominator =
        |powers: &[f64]| charge_slope * powers.iter().sum::<f64>() + circuit_power_w;

    // Phase-I: the best achievable SE bounds the threshold's feasibility
    // and provides a strictly interior warm start.
    let phase1 = se::solve_se(contexts, metric, budgets, &options.se)?;
    let max_se = phase1.se_bits_per_s_per_hz;
    if se_threshold > 0.0 && max_se - se_threshold <= 1e-10 * se_threshold.max(1.0) {
        let q = max_se * band / denominator(phase1.allocation.powers());
        return Ok(EeReport {
            se_bits_per_s_per_hz: max_se,
            ee_bits_per_joule: q,
            allocation: phase1.allocation,
            q_trace_bits_per_joule: Vec::new(),
            root_residual_bits_per_s: f64::INFINITY,
            iterations: 0,
            status: SolveStatus::Infeasible,
        });
    }

    let se_rates = RateObjective::new(contexts, metric, scale);
    let mut ratio = 0.0f64;
    let mut powers = phase1.allocation.powers().to_vec();
    let mut trace = Vec::new();
    let mut status = SolveStatus::MaxIter;
    let mut iterations = 0usize;
    while iterations < options.max_iterations {
        iterations += 1;
        let objective = RatioSurplus {
            rates: RateObjective::new(contexts, metric, scale),
            charge_per_watt: ratio * charge_slope,
        };
        let threshold_rates = RateObjective::new(contexts, metric, scale);
        let set = FeasibleSet {
            weighted_coeffs: contexts
                .iter()
                .map(|ctx| {
                    let e = ctx.constellation().mean_abs();
                    e * e
                })
                .collect(),
            weighted_rhs: budgets.weighted_rhs(n_half),
            plain_rhs: budgets.plain_rhs(n_half),
            threshold: (se_threshold > 0.0).then_some(SuperlevelConstraint {
                rates: &threshold_rates,
                level: se_threshold,
            }),
            start: Some(powers.clone()),
        };
        let report = barrier::maximize_concave(&objective, &set, options.se.gap_tol)?;
        if report.status == SolveStatus::Infeasible {
            // Phase-I certified feasibility, so this indicates numerics.
            return Err(EeError::InvalidConfig(
                "subproblem reported infeasible after a feasible phase-I".to_string(),
            ));
        }
        powers = report.powers;
        let next = se_rates.total(&powers) / denominator(&powers);
        trace.push(next * band);
        let step = (next - ratio).abs();
        ratio = next;
        if step <= options.ratio_tol {
            status = SolveStatus::Converged;
            break;
        }
    }
    let se_value = se_rates.total(&powers);
    let throughput = se_value * band;
    let q_bits_per_joule = ratio * band;
    let root = throughput - q_bits_per_joule * denominator(&powers);
    Ok(EeReport {
        allocation: PowerAllocation::new(powers, contexts[0].constellation()),
        ee_bits_per_joule: q_bits_per_joule,
        se_bits_per_s_per_hz: se_value,
        q_trace_bits_per_joule: trace,
        root_residual_bits_per_s: root,
        iterations,
        status,
    })
}
