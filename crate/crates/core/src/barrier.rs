//! Concave maximization over the shared power-allocation feasible set.
//!
//! Every optimization in this crate maximizes a separable concave objective
//! `f(p) = sum_i f_i(p_i)` over nonnegative powers subject to at most two
//! linear budgets (a weighted "optical" budget and an unweighted
//! "electrical" budget) and an optional concave superlevel constraint
//! `sum_i r_i(p_i) >= level` used for minimum-throughput thresholds.
//!
//! The solver is a log-barrier interior-point method: for an increasing
//! barrier parameter `t` it maximizes `t f(p) + sum_j ln(slack_j)` with
//! damped Newton steps and a backtracking line search that never leaves the
//! strict interior. Each centering pass multiplies `t` by ten until the
//! duality-gap estimate `m / t` (with `m` the number of inequality
//! constraints) drops below the requested tolerance. Dual variables for the
//! two budgets fall out of the final barrier state as `1 / (t slack)`.
//!
//! The Newton system is dense but tiny (one variable per data subcarrier),
//! so the factorization is a direct Cholesky decomposition rather than an
//! external linear-algebra dependency.

use thiserror::Error;

/// Default duality-gap tolerance for [`maximize_concave`].
pub const DEFAULT_GAP_TOL: f64 = 1e-8;

/// Hard cap on outer barrier stages (each multiplies `t` by ten).
const MAX_OUTER_STAGES: usize = 48;

/// Hard cap on damped Newton steps within one centering pass.
const MAX_NEWTON_STEPS: usize = 120;

/// Barrier parameter growth per outer stage.
const BARRIER_GROWTH: f64 = 10.0;

/// Errors from feasible-set validation or irrecoverable numerics.
#[derive(Debug, Error)]
pub enum BarrierError {
    /// The feasible set itself is malformed (sizes, signs, missing budgets).
    #[error("invalid feasible set: {0}")]
    InvalidSet(String),
    /// Objective or gradient evaluated to a non-finite number.
    #[error("non-finite objective data: {0}")]
    NonFinite(String),
}

/// Separable concave function of the power vector with first and second
/// derivatives, evaluated one coordinate at a time.
///
/// Implementors must be concave and continuously differentiable in each
/// coordinate on `p >= 0`; `curvature` must be non-positive.
pub trait ConcaveSeparable: Sync {
    /// Number of coordinates (data subcarriers).
    fn len(&self) -> usize;

    /// Whether the function has no coordinates.
    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Value of the `i`-th component at power `p`.
    fn value(&self, i: usize, p: f64) -> f64;

    /// First derivative of the `i`-th component at power `p`.
    fn gradient(&self, i: usize, p: f64) -> f64;

    /// Second derivative of the `i`-th component at power `p` (<= 0).
    fn curvature(&self, i: usize, p: f64) -> f64;

    /// Sum of all components at the given power vector.
    fn total(&self, powers: &[f64]) -> f64 {
        powers
            .iter()
            .enumerate()
            .map(|(i, &p)| self.value(i, p))
            .sum()
    }
}

/// Minimum-throughput side constraint `sum_i rates_i(p_i) >= level`.
pub struct SuperlevelConstraint<'a> {
    /// Concave per-coordinate throughput terms (same length as the set).
    pub rates: &'a dyn ConcaveSeparable,
    /// Required lower bound on the summed rates.
    pub level: f64,
}

/// Feasible set shared by the spectral- and energy-efficiency problems.
///
/// Budgets set to `None` are treated as absent (unbounded); at least one of
/// the two must be finite because every objective in this crate increases
/// with power.
pub struct FeasibleSet<'a> {
    /// Per-coordinate weights of the weighted budget (all > 0).
    pub weighted_coeffs: Vec<f64>,
    /// Right-hand side of `sum_i weighted_coeffs[i] p_i <= rhs`.
    pub weighted_rhs: Option<f64>,
    /// Right-hand side of `sum_i p_i <= rhs`.
    pub plain_rhs: Option<f64>,
    /// Optional minimum-throughput constraint.
    pub threshold: Option<SuperlevelConstraint<'a>>,
    /// Optional strictly feasible warm start (ignored when not interior).
    pub start: Option<Vec<f64>>,
}

/// Termination condition of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Duality gap below tolerance; the report's powers are optimal.
    Converged,
    /// The feasible set has no strict interior (threshold unreachable).
    Infeasible,
    /// Iteration caps were hit before the gap closed.
    MaxIter,
}

/// Outcome of [`maximize_concave`].
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Optimal (or best found) powers, one per coordinate.
    pub powers: Vec<f64>,
    /// Objective value at `powers`.
    pub objective: f64,
    /// Dual variable of the weighted budget (0 when absent or slack).
    pub dual_weighted: f64,
    /// Dual variable of the plain budget (0 when absent or slack).
    pub dual_plain: f64,
    /// Certified optimality residual (duality-gap estimate).
    pub kkt_residual: f64,
    /// Total damped Newton steps across all barrier stages.
    pub iterations: usize,
    /// Objective value after each outer barrier stage (non-decreasing).
    pub outer_objectives: Vec<f64>,
    /// How the solve ended.
    pub status: SolveStatus,
}

/// Constraint slacks at a strictly interior point.
struct Slacks {
    weighted: Option<f64>,
    plain: Option<f64>,
    threshold: Option<f64>,
}

/// Computes all slacks, or `None` if the point is not strictly interior.
fn interior_slacks(set: &FeasibleSet, powers: &[f64]) -> Option<Slacks> {
    if powers.iter().any(|&p| p <= 0.0) {
        return None;
    }
    let weighted = match set.weighted_rhs {
        Some(rhs) => {
            let used: f64 = powers
                .iter()
                .zip(&set.weighted_coeffs)
                .map(|(&p, &a)| a * p)
                .sum();
            let s = rhs - used;
            if s <= 0.0 {
                return None;
            }
            Some(s)
        }
        None => None,
    };
    let plain = match set.plain_rhs {
        Some(rhs) => {
            let s = rhs - powers.iter().sum::<f64>();
            if s <= 0.0 {
                return None;
            }
            Some(s)
        }
        None => None,
    };
    let threshold = match &set.threshold {
        Some(c) => {
            let s = c.rates.total(powers) - c.level;
            if s <= 0.0 {
                return None;
            }
            Some(s)
        }
        None => None,
    };
    Some(Slacks {
        weighted,
        plain,
        threshold,
    })
}

/// Barrier value `t f(p) + sum ln(slack)` at a strictly interior point.
fn barrier_value(
    objective: &dyn ConcaveSeparable,
    powers: &[f64],
    t: f64,
    slacks: &Slacks,
) -> f64 {
    let mut b = t * objective.total(powers);
    b += powers.iter().map(|&p| p.ln()).sum::<f64>();
    if let Some(s) = slacks.weighted {
        b += s.ln();
    }
    if let Some(s) = slacks.plain {
        b += s.ln();
    }
    if let Some(s) = slacks.threshold {
        b += s.ln();
    }
    b
}

/// Solves the dense symmetric positive-definite system `A x = b` in place by
/// Cholesky factorization; returns `false` if a pivot fails.
fn cholesky_solve(a: &mut [f64], n: usize, b: &mut [f64]) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / d;
        }
    }
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= a[i * n + k] * b[k];
        }
        b[i] = v / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in (i + 1)..n {
            v -= a[k * n + i] * b[k];
        }
        b[i] = v / a[i * n + i];
    }
    true
}

/// One centering pass: damped Newton on the barrier at fixed `t`.
///
/// Returns `(newton_steps, converged)` and leaves `powers` at (or near) the
/// central point. The iterate never leaves the strict interior.
fn center(
    objective: &dyn ConcaveSeparable,
    set: &FeasibleSet,
    powers: &mut [f64],
    t: f64,
    tol: f64,
) -> Result<(usize, bool), BarrierError> {
    let n = powers.len();
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n * n];
    let mut step = vec![0.0; n];
    let mut trial = vec![0.0; n];
    // Stop centering once the Newton decrement contributes less than a
    // small fraction of the duality gap the stage is allowed to leave.
    let decrement_tol = 1e-3 * tol * t + 1e-13;
    let mut steps = 0usize;
    let mut converged = false;
    while steps < MAX_NEWTON_STEPS {
        let slacks = interior_slacks(set, powers)
            .expect("centering iterates must stay strictly interior");
        // Assemble gradient and the negated Hessian (positive definite).
        hess.fill(0.0);
        for i in 0..n {
            let g = objective.gradient(i, powers[i]);
            let c = objective.curvature(i, powers[i]);
            if !g.is_finite() || !c.is_finite() {
                return Err(BarrierError::NonFinite(format!(
                    "objective derivatives at coordinate {i}, power {}",
                    powers[i]
                )));
            }
            grad[i] = t * g + 1.0 / powers[i];
            hess[i * n + i] = -t * c + 1.0 / (powers[i] * powers[i]);
        }
        if let (Some(s), Some(rhs)) = (slacks.weighted, set.weighted_rhs) {
            debug_assert!(rhs.is_finite());
            let inv = 1.0 / s;
            for i in 0..n {
                grad[i] -= set.weighted_coeffs[i] * inv;
                for j in 0..n {
                    hess[i * n + j] +=
                        set.weighted_coeffs[i] * set.weighted_coeffs[j] * inv * inv;
                }
            }
        }
        if let Some(s) = slacks.plain {
            let inv = 1.0 / s;
            for i in 0..n {
                grad[i] -= inv;
                for j in 0..n {
                    hess[i * n + j] += inv * inv;
                }
            }
        }
        if let (Some(s), Some(c)) = (slacks.threshold, set.threshold.as_ref()) {
            let inv = 1.0 / s;
            for i in 0..n {
                let rg = c.rates.gradient(i, powers[i]);
                let rc = c.rates.curvature(i, powers[i]);
                if !rg.is_finite() || !rc.is_finite() {
                    return Err(BarrierError::NonFinite(format!(
                        "threshold derivatives at coordinate {i}, power {}",
                        powers[i]
                    )));
                }
                grad[i] += rg * inv;
                hess[i * n + i] -= rc * inv;
                for j in 0..n {
                    let rgj = c.rates.gradient(j, powers[j]);
                    hess[i * n + j] += rg * rgj * inv * inv;
                }
            }
        }
        // Newton step with a diagonal-jitter retry if the factorization
        // stumbles on roundoff.
        step.copy_from_slice(&grad);
        let mut factor = hess.clone();
        if !cholesky_solve(&mut factor, n, &mut step) {
            let bump = 1e-10
                * (0..n)
                    .map(|i| hess[i * n + i])
                    .fold(1.0f64, |acc, d| acc.max(d));
            for i in 0..n {
                hess[i * n + i] += bump;
            }
            step.copy_from_slice(&grad);
            let mut retry = hess.clone();
            if !cholesky_solve(&mut retry, n, &mut step) {
                return Err(BarrierError::NonFinite(
                    "barrier Hessian lost positive definiteness".to_string(),
                ));
            }
        }
        steps += 1;
        let decrement: f64 = grad.iter().zip(&step).map(|(&g, &d)| g * d).sum();
        if decrement / 2.0 <= decrement_tol {
            converged = true;
            break;
        }
        // Backtracking line search: first pull the step inside the domain,
        // then require an Armijo-style increase of the barrier value.
        let current = barrier_value(objective, powers, t, &slacks);
        let mut alpha = 1.0f64;
        let mut moved = false;
        for _ in 0..70 {
            for i in 0..n {
                trial[i] = powers[i] + alpha * step[i];
            }
            if let Some(trial_slacks) = interior_slacks(set, &trial) {
                let value = barrier_value(objective, &trial, t, &trial_slacks);
                if value >= current + 0.25 * alpha * decrement || value >= current {
                    powers.copy_from_slice(&trial);
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !moved {
            // The line search stalled at numerical precision; accept the
            // current point as the best this stage can certify.
            break;
        }
    }
    Ok((steps, converged))
}

/// Strictly interior default start: uniform powers at half of the tighter
/// budget (ignoring the threshold, which phase-I handles separately).
fn interior_budget_start(set: &FeasibleSet, n: usize) -> Vec<f64> {
    let mut cap = f64::INFINITY;
    if let Some(rhs) = set.weighted_rhs {
        let coeff_sum: f64 = set.weighted_coeffs.iter().sum();
        cap = cap.min(rhs / coeff_sum);
    }
    if let Some(rhs) = set.plain_rhs {
        cap = cap.min(rhs / n as f64);
    }
    vec![0.5 * cap; n]
}

/// Validates the set against the objective and returns the dimension.
fn validate(objective: &dyn ConcaveSeparable, set: &FeasibleSet) -> Result<usize, BarrierError> {
    let n = objective.len();
    if n == 0 {
        return Err(BarrierError::InvalidSet(
            "objective has no coordinates".to_string(),
        ));
    }
    if set.weighted_coeffs.len() != n {
        return Err(BarrierError::InvalidSet(format!(
            "weighted budget has {} coefficients for {} coordinates",
            set.weighted_coeffs.len(),
            n
        )));
    }
    if set.weighted_coeffs.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(BarrierError::InvalidSet(
            "weighted budget coefficients must be positive and finite".to_string(),
        ));
    }
    for (name, rhs) in [("weighted", set.weighted_rhs), ("plain", set.plain_rhs)] {
        if let Some(rhs) = rhs {
            if !(rhs > 0.0) || !rhs.is_finite() {
                return Err(BarrierError::InvalidSet(format!(
                    "{name} budget right-hand side must be positive and finite, got {rhs}"
                )));
            }
        }
    }
    if set.weighted_rhs.is_none() && set.plain_rhs.is_none() {
        return Err(BarrierError::InvalidSet(
            "objectives increase with power, so at least one budget must be finite".to_string(),
        ));
    }
    if let Some(c) = &set.threshold {
        if c.rates.len() != n {
            return Err(BarrierError::InvalidSet(format!(
                "threshold has {} coordinates for {} objective coordinates",
                c.rates.len(),
                n
            )));
        }
        if !c.level.is_finite() {
            return Err(BarrierError::InvalidSet(format!(
                "threshold level must be finite, got {}",
                c.level
            )));
        }
    }
    Ok(n)
}

/// Maximizes a separable concave objective over the feasible set with a
/// log-barrier interior-point method.
///
/// Stops when the duality-gap estimate `m / t` falls below `tol` (with `m`
/// the number of inequality constraints). When the set has a throughput
/// threshold and no obvious interior point, a phase-I pass maximizes the
/// threshold's own rate sum to either find one or certify infeasibility.
///
/// Returned duals certify the two budgets; every intermediate iterate is
/// strictly feasible, so the report's powers always respect the set.
pub fn maximize_concave(
    objective: &dyn ConcaveSeparable,
    set: &FeasibleSet,
    tol: f64,
) -> Result<SolveReport, BarrierError> {
    assert!(tol > 0.0, "tolerance must be positive, got {tol}");
    let n = validate(objective, set)?;
    // Choose a strictly interior starting point.
    let mut powers = match &set.start {
        Some(hint) if hint.len() == n && interior_slacks(set, hint).is_some() => hint.clone(),
        _ => interior_budget_start(set, n),
    };
    if interior_slacks(set, &powers).is_none() {
        // The budget-interior default violates the throughput threshold, so
        // run phase-I: maximize the threshold rates subject to budgets only.
        let constraint = set
            .threshold
            .as_ref()
            .expect("only the threshold can exclude the budget-interior start");
        let relaxed = FeasibleSet {
            weighted_coeffs: set.weighted_coeffs.clone(),
            weighted_rhs: set.weighted_rhs,
            plain_rhs: set.plain_rhs,
            threshold: None,
            start: None,
        };
        let phase1 = maximize_concave(constraint.rates, &relaxed, tol)?;
        let margin = 1e-10 * constraint.level.abs().max(1.0);
        if phase1.objective - constraint.level <= margin {
            return Ok(SolveReport {
                powers: phase1.powers,
                objective: f64::NEG_INFINITY,
                dual_weighted: 0.0,
                dual_plain: 0.0,
                kkt_residual: f64::INFINITY,
                iterations: phase1.iterations,
                outer_objectives: Vec::new(),
                status: SolveStatus::Infeasible,
            });
        }
        powers = phase1.powers;
        debug_assert!(
            interior_slacks(set, &powers).is_some(),
            "phase-I maximizer must be interior when its value clears the level"
        );
    }

    let constraint_count = (n
        + usize::from(set.weighted_rhs.is_some())
        + usize::from(set.plain_rhs.is_some())
        + usize::from(set.threshold.is_some())) as f64;
    let mut t = 1.0f64;
    let mut iterations = 0usize;
    let mut outer_objectives = Vec::new();
    let mut status = SolveStatus::MaxIter;
    let mut gap = f64::INFINITY;
    for _ in 0..MAX_OUTER_STAGES {
        let (steps, centered) = center(objective, set, &mut powers, t, tol)?;
        iterations += steps;
        outer_objectives.push(objective.total(&powers));
        gap = constraint_count / t;
        if gap <= tol {
            if centered {
                status = SolveStatus::Converged;
            }
            break;
        }
        t *= BARRIER_GROWTH;
    }
    let slacks = interior_slacks(set, &powers).expect("final point is interior");
    let dual_weighted = slacks.weighted.map_or(0.0, |s| 1.0 / (t * s));
    let dual_plain = slacks.plain.map_or(0.0, |s| 1.0 / (t * s));
    Ok(SolveReport {
        objective: objective.total(&powers),
        powers,
        dual_weighted,
        dual_plain,
        kkt_residual: gap,
        iterations,
        outer_objectives,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::Constellation;
    use crate::rates::{RateContext, RateMetric};
    use rayon::prelude::*;

    const GAP_TOL: f64 = 1e-8;
    /// Grid step for the brute-force oracle, as a fraction of the budget.
    const GRID_FRACTION: f64 = 1e-4;

    /// Logarithmic test objective `sum_i ln(1 + g_i p_i)`.
    struct LogUtility {
        gains: Vec<f64>,
    }

    impl ConcaveSeparable for LogUtility {
        fn len(&self) -> usize {
            self.gains.len()
        }
        fn value(&self, i: usize, p: f64) -> f64 {
            (1.0 + self.gains[i] * p).ln()
        }
        fn gradient(&self, i: usize, p: f64) -> f64 {
            self.gains[i] / (1.0 + self.gains[i] * p)
        }
        fn curvature(&self, i: usize, p: f64) -> f64 {
            let g = self.gains[i];
            -g * g / ((1.0 + g * p) * (1.0 + g * p))
        }
    }

    /// Per-subcarrier rate sum scaled into spectral-efficiency units.
    struct RateSum {
        contexts: Vec<RateContext>,
        metric: RateMetric,
        scale: f64,
    }

    impl ConcaveSeparable for RateSum {
        fn len(&self) -> usize {
            self.contexts.len()
        }
        fn value(&self, i: usize, p: f64) -> f64 {
            self.scale * self.contexts[i].rate(self.metric, p)
        }
        fn gradient(&self, i: usize, p: f64) -> f64 {
            self.scale * self.contexts[i].rate_gradient(self.metric, p)
        }
        fn curvature(&self, i: usize, p: f64) -> f64 {
            self.scale * self.contexts[i].rate_curvature(self.metric, p)
        }
    }

    /// Two-subcarrier lower-bound instance with an electrical budget that
    /// binds and a loose weighted budget.
    fn two_carrier_instance() -> (RateSum, FeasibleSet<'static>) {
        let bandwidth = 1e6;
        let noise = 1e-12;
        let contexts = vec![
            RateContext::new(
                Constellation::make_qam(4).unwrap(),
                4.0e-10,
                noise,
                bandwidth,
                16,
            )
            .unwrap(),
            RateContext::new(
                Constellation::make_qam(4).unwrap(),
                1.5e-10,
                noise,
                bandwidth,
                16,
            )
            .unwrap(),
        ];
        // Spectral-efficiency normalization for N = 3 (2N W of bandwidth).
        let scale = 1.0 / (2.0 * 3.0 * bandwidth);
        let objective = RateSum {
            contexts,
            metric: RateMetric::LowerBound,
            scale,
        };
        let set = FeasibleSet {
            weighted_coeffs: vec![1.0, 1.0],
            weighted_rhs: Some(0.5),
            plain_rhs: Some(0.02),
            threshold: None,
            start: None,
        };
        (objective, set)
    }

    #[test]
    fn matches_two_dimensional_grid_search() {
        let (objective, set) = two_carrier_instance();
        let report = maximize_concave(&objective, &set, GAP_TOL).expect("solve succeeds");
        assert_eq!(report.status, SolveStatus::Converged, "must converge");

        // Brute-force oracle: tabulate each axis once, then scan the
        // feasible triangle in parallel.
        let budget = set.plain_rhs.unwrap();
        let steps = (1.0 / GRID_FRACTION) as usize;
        let axis: Vec<f64> = (0..=steps)
            .map(|k| budget * k as f64 / steps as f64)
            .collect();
        let first: Vec<f64> = axis.iter().map(|&p| objective.value(0, p)).collect();
        let second: Vec<f64> = axis.iter().map(|&p| objective.value(1, p)).collect();
        let best = (0..=steps)
            .into_par_iter()
            .map(|i| {
                let mut row_best = f64::NEG_INFINITY;
                for j in 0..=(steps - i) {
                    let v = first[i] + second[j];
                    if v > row_best {
                        row_best = v;
                    }
                }
                row_best
            })
            .reduce(|| f64::NEG_INFINITY, f64::max);
        assert!(
            ((report.objective - best) / best).abs() < 1e-3,
            "barrier objective {} vs grid oracle {best}",
            report.objective
        );
        assert!(
            report.objective >= best - 1e-6 * best.abs(),
            "the grid value is a lower bound on the optimum"
        );
    }

    #[test]
    fn respects_budgets_within_tolerance() {
        let (objective, set) = two_carrier_instance();
        let report = maximize_concave(&objective, &set, GAP_TOL).expect("solve succeeds");
        let plain: f64 = report.powers.iter().sum();
        let weighted: f64 = report
            .powers
            .iter()
            .zip(&set.weighted_coeffs)
            .map(|(&p, &a)| a * p)
            .sum();
        assert!(
            plain <= set.plain_rhs.unwrap() * (1.0 + 1e-9),
            "plain budget violated: {plain}"
        );
        assert!(
            weighted <= set.weighted_rhs.unwrap() * (1.0 + 1e-9),
            "weighted budget violated: {weighted}"
        );
        assert!(
            report.powers.iter().all(|&p| p > 0.0),
            "interior method keeps powers positive"
        );
    }

    #[test]
    fn complementary_slackness_certifies_duals() {
        let (objective, set) = two_carrier_instance();
        let report = maximize_concave(&objective, &set, GAP_TOL).expect("solve succeeds");
        let plain_slack = set.plain_rhs.unwrap() - report.powers.iter().sum::<f64>();
        let weighted_slack = set.weighted_rhs.unwrap()
            - report
                .powers
                .iter()
                .zip(&set.weighted_coeffs)
                .map(|(&p, &a)| a * p)
                .sum::<f64>();
        assert!(
            report.dual_plain * plain_slack <= 10.0 * GAP_TOL,
            "plain budget: dual {} times slack {plain_slack} too large",
            report.dual_plain
        );
        assert!(
            report.dual_weighted * weighted_slack <= 10.0 * GAP_TOL,
            "weighted budget: dual {} times slack {weighted_slack} too large",
            report.dual_weighted
        );
        // The electrical budget binds here, so its dual must be active.
        assert!(
            report.dual_plain > 1e-3,
            "binding budget should carry a positive dual, got {}",
            report.dual_plain
        );
    }

    #[test]
    fn outer_objectives_are_monotone() {
        let (objective, set) = two_carrier_instance();
        let report = maximize_concave(&objective, &set, GAP_TOL).expect("solve succeeds");
        assert!(
            report.outer_objectives.len() > 1,
            "multiple barrier stages expected"
        );
        for pair in report.outer_objectives.windows(2) {
            assert!(
                pair[1] >= pair[0] - 1e-9 * pair[0].abs().max(1.0),
                "outer objective decreased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn zero_level_threshold_matches_unconstrained_run() {
        let (objective, mut set) = two_carrier_instance();
        let free = maximize_concave(&objective, &set, GAP_TOL).expect("unconstrained run");
        let rates = RateSum {
            contexts: objective.contexts.clone(),
            metric: RateMetric::LowerBound,
            scale: objective.scale,
        };
        set.threshold = Some(SuperlevelConstraint {
            rates: &rates,
            level: 0.0,
        });
        let gated = maximize_concave(&objective, &set, GAP_TOL).expect("thresholded run");
        assert_eq!(gated.status, SolveStatus::Converged, "must converge");
        let budget = set.plain_rhs.unwrap();
        for (a, b) in free.powers.iter().zip(&gated.powers) {
            assert!(
                (a - b).abs() < 1e-5 * budget,
                "inactive threshold must not move the optimum: {a} vs {b}"
            );
        }
    }

    #[test]
    fn unreachable_threshold_is_infeasible() {
        let (objective, mut set) = two_carrier_instance();
        // Each lower-bound rate saturates strictly below log2(M) + 1 - 1/ln2
        // bits per channel use, so this level is unreachable.
        let ceiling = objective.scale
            * 2.0
            * 1e6
            * (2.0 + 1.0 - std::f64::consts::LOG2_E);
        let rates = RateSum {
            contexts: objective.contexts.clone(),
            metric: RateMetric::LowerBound,
            scale: objective.scale,
        };
        set.threshold = Some(SuperlevelConstraint {
            rates: &rates,
            level: 2.0 * ceiling,
        });
        let report = maximize_concave(&objective, &set, GAP_TOL).expect("solve runs");
        assert_eq!(
            report.status,
            SolveStatus::Infeasible,
            "a level above the rate ceiling has no feasible point"
        );
    }

    #[test]
    fn active_threshold_lifts_the_rate_sum() {
        // Objective and threshold disagree: the objective prefers the
        // strong coordinate, the threshold forces total rate upward.
        let (objective, mut set) = two_carrier_instance();
        let free = maximize_concave(&objective, &set, GAP_TOL).expect("unconstrained run");
        let rates = RateSum {
            contexts: objective.contexts.clone(),
            metric: RateMetric::LowerBound,
            scale: objective.scale,
        };
        // Demand a rate sum slightly above the unconstrained optimum of the
        // utility; the rate-threshold with a weak-gain objective must bind.
        let weak = LogUtility {
            gains: vec![50.0, 50.0],
        };
        let level = 0.999 * free.objective;
        set.threshold = Some(SuperlevelConstraint {
            rates: &rates,
            level,
        });
        let report = maximize_concave(&weak, &set, GAP_TOL).expect("thresholded run");
        assert_eq!(report.status, SolveStatus::Converged, "must converge");
        let achieved = rates.total(&report.powers);
        assert!(
            achieved >= level * (1.0 - 1e-9),
            "threshold violated: {achieved} < {level}"
        );
    }

    #[test]
    fn rejects_malformed_sets() {
        let objective = LogUtility {
            gains: vec![1.0, 2.0],
        };
        let no_budget = FeasibleSet {
            weighted_coeffs: vec![1.0, 1.0],
            weighted_rhs: None,
            plain_rhs: None,
            threshold: None,
            start: None,
        };
        assert!(
            matches!(
                maximize_concave(&objective, &no_budget, GAP_TOL),
                Err(BarrierError::InvalidSet(_))
            ),
            "two unbounded budgets cannot cap an increasing objective"
        );
        let bad_coeffs = FeasibleSet {
            weighted_coeffs: vec![1.0, -1.0],
            weighted_rhs: Some(1.0),
            plain_rhs: None,
            threshold: None,
            start: None,
        };
        assert!(
            matches!(
                maximize_concave(&objective, &bad_coeffs, GAP_TOL),
                Err(BarrierError::InvalidSet(_))
            ),
            "negative weighted coefficients are rejected"
        );
        let size_mismatch = FeasibleSet {
            weighted_coeffs: vec![1.0],
            weighted_rhs: Some(1.0),
            plain_rhs: None,
            threshold: None,
            start: None,
        };
        assert!(
            matches!(
                maximize_concave(&objective, &size_mismatch, GAP_TOL),
                Err(BarrierError::InvalidSet(_))
            ),
            "coefficient count must match the objective"
        );
    }

    #[test]
    fn single_budget_instances_solve() {
        let objective = LogUtility {
            gains: vec![4.0, 1.0, 0.25],
        };
        // Water-filling with only the plain budget: strongest gain gets the
        // most power and the budget is exhausted.
        let set = FeasibleSet {
            weighted_coeffs: vec![1.0, 1.0, 1.0],
            weighted_rhs: None,
            plain_rhs: Some(3.0),
            threshold: None,
            start: None,
        };
        let report = maximize_concave(&objective, &set, GAP_TOL).expect("solve succeeds");
        assert_eq!(report.status, SolveStatus::Converged, "must converge");
        assert!(
            report.powers[0] > report.powers[1] && report.powers[1] > report.powers[2],
            "water-filling orders powers by gain: {:?}",
            report.powers
        );
        let used: f64 = report.powers.iter().sum();
        assert!(
            (used - 3.0).abs() < 1e-4,
            "an increasing objective exhausts its only budget, used {used}"
        );
        // Closed-form water-filling check: p_i = 1/lambda - 1/g_i clipped
        // at zero. The weakest gain clips (1/lambda - 4 < 0), leaving two
        // active coordinates with 2/lambda = 3 + 1/4 + 1.
        let lambda = 2.0 / (3.0 + 1.0 / 4.0 + 1.0);
        for (i, expected) in [1.0 / lambda - 0.25, 1.0 / lambda - 1.0, 0.0]
            .into_iter()
            .enumerate()
        {
            assert!(
                (report.powers[i] - expected).abs() < 1e-4,
                "coordinate {i}: {} vs water-filling {expected}",
                report.powers[i]
            );
        }
    }

    #[test]
    fn warm_start_hint_reaches_the_same_optimum() {
        let (objective, mut set) = two_carrier_instance();
        let cold = maximize_concave(&objective, &set, GAP_TOL).expect("cold run");
        set.start = Some(cold.powers.clone());
        let warm = maximize_concave(&objective, &set, GAP_TOL).expect("warm run");
        assert_eq!(warm.status, SolveStatus::Converged, "warm run converges");
        for (a, b) in cold.powers.iter().zip(&warm.powers) {
            assert!(
                (a - b).abs() < 1e-6 * set.plain_rhs.unwrap(),
                "warm and cold optima agree"
            );
        }
        // An infeasible hint must be ignored, not trip the solver.
        set.start = Some(vec![1e9, 1e9]);
        let ignored = maximize_concave(&objective, &set, GAP_TOL).expect("hinted run");
        assert_eq!(ignored.status, SolveStatus::Converged, "bad hint ignored");
    }
}
