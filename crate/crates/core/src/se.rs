//! Spectral-efficiency power allocation and DC-bias accounting.
//!
//! A DC-biased optical OFDM symbol spans `2N` real time-domain samples built
//! from `N - 1` data subcarriers (indices `1..N-1`; the DC and Nyquist bins
//! are blocked and the upper half mirrors by Hermitian symmetry). The
//! smallest bias that never clips the signal is
//! `I_dc = sqrt(2/N) * sum_i sqrt(p_i) * max_k |X_k|`, which turns the mean
//! optical-power cap `P_o` and the total electrical-power cap `P_e` into two
//! linear budgets on the subcarrier powers:
//!
//! - weighted: `sum_i p_i E^2{|X_i|} <= N P_o^2 / (2 (N - 1))`
//! - plain:    `sum_i p_i <= P_e / (4N - 2)`
//!
//! Spectral efficiency is the summed subcarrier rate over the full `2NW` of
//! occupied bandwidth. Two solvers maximize it:
//!
//! - [`solve_se`] feeds any rate metric through the log-barrier maximizer;
//!   the lower-bound and constant-gap metrics share their maximizer, so
//!   either reproduces the other's allocation.
//! - [`solve_se_exact`] implements the mercury-water-filling scheme for the
//!   exact metric: an outer bisection prices the weighted budget and an
//!   inner bisection prices the plain budget, with per-subcarrier powers
//!   recovered through the MMSE inverse.
//!
//! [`simulate_time_domain`] draws whole OFDM symbols to verify the bias and
//! power accounting against the two original (pre-relaxation) constraints.

use crate::barrier::{self, BarrierError, ConcaveSeparable, FeasibleSet, SolveStatus};
use crate::constellation::Constellation;
use crate::rates::{RateContext, RateError, RateMetric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Default duality-gap tolerance handed to the barrier solver.
pub const DEFAULT_GAP_TOL: f64 = 1e-8;
/// Default absolute width tolerance of the outer (weighted-budget) bisection.
pub const DEFAULT_OUTER_TOL: f64 = 1e-9;
/// Default absolute width tolerance of the inner (plain-budget) bisection.
pub const DEFAULT_INNER_TOL: f64 = 1e-10;
/// Resolution of the shared MMSE bracket cache used by the exact solver.
const MMSE_CACHE_POINTS: usize = 384;

/// Errors from spectral-efficiency solvers.
#[derive(Debug, Error)]
pub enum SeError {
    /// The subcarrier contexts disagree on bandwidth or alphabet, or are
    /// missing entirely.
    #[error("invalid link configuration: {0}")]
    InvalidLink(String),
    /// The optimizer rejected the constraint set.
    #[error(transparent)]
    Solver(#[from] BarrierError),
    /// An MMSE inversion failed (should not happen for valid duals).
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// Optical and electrical power budgets in watts; `None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budgets {
    /// Cap on the mean optical power `E{x_dc,k}` (watts).
    pub optical_w: Option<f64>,
    /// Cap on the total electrical power `sum_k E{x_dc,k^2}` (watts).
    pub electrical_w: Option<f64>,
}

impl Budgets {
    /// Right-hand side of the weighted linear budget for half-length `n`.
    pub fn weighted_rhs(&self, n_half: usize) -> Option<f64> {
        let n = n_half as f64;
        self.optical_w.map(|p_o| n * p_o * p_o / (2.0 * (n - 1.0)))
    }

    /// Right-hand side of the plain linear budget for half-length `n`.
    pub fn plain_rhs(&self, n_half: usize) -> Option<f64> {
        let n = n_half as f64;
        self.electrical_w.map(|p_e| p_e / (4.0 * n - 2.0))
    }
}

/// Solver knobs with defaults matching the experiment configuration.
#[derive(Debug, Clone, Copy)]
pub struct SeOptions {
    /// Duality-gap tolerance of the barrier solver.
    pub gap_tol: f64,
    /// Absolute tolerance of the outer dual bisection (exact solver).
    pub outer_tol: f64,
    /// Absolute tolerance of the inner dual bisection (exact solver).
    pub inner_tol: f64,
}

impl Default for SeOptions {
    fn default() -> Self {
        Self {
            gap_tol: DEFAULT_GAP_TOL,
            outer_tol: DEFAULT_OUTER_TOL,
            inner_tol: DEFAULT_INNER_TOL,
        }
    }
}

/// Smallest DC bias (watts of drive amplitude) that never clips the
/// time-domain signal: `sqrt(2/N) * sum_i sqrt(p_i) * max_k |X_k|`.
///
/// The worst-case modulus makes the bias deterministic; for 4-QAM every
/// symbol has unit modulus, so the worst case is also the typical case.
pub fn dc_bias(powers: &[f64], constellation: &Constellation) -> f64 {
    let n = (powers.len() + 1) as f64;
    (2.0 / n).sqrt() * powers.iter().map(|&p| p.sqrt()).sum::<f64>() * constellation.max_abs()
}

/// Subcarrier powers with the derived bias and power accounting.
#[derive(Debug, Clone)]
pub struct PowerAllocation {
    powers: Vec<f64>,
    i_dc: f64,
}

impl PowerAllocation {
    /// Builds an allocation for data subcarriers `1..N-1` and freezes its
    /// non-clipping DC bias.
    pub fn new(powers: Vec<f64>, constellation: &Constellation) -> Self {
        assert!(
            powers.iter().all(|&p| p >= 0.0 && p.is_finite()),
            "powers must be finite and non-negative"
        );
        let i_dc = dc_bias(&powers, constellation);
        Self { powers, i_dc }
    }

    /// Per-subcarrier electrical powers (watts), one per data subcarrier.
    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// Half the IFFT length `N` (data subcarriers plus one).
    pub fn half_subcarriers(&self) -> usize {
        self.powers.len() + 1
    }

    /// The frozen non-clipping DC bias.
    pub fn i_dc(&self) -> f64 {
        self.i_dc
    }

    /// Information-bearing electrical power `2 sum_i p_i` over the symbol.
    pub fn information_power_w(&self) -> f64 {
        2.0 * self.powers.iter().sum::<f64>()
    }

    /// Electrical power of the bias across all `2N` samples: `2N I_dc^2`.
    pub fn dc_power_w(&self) -> f64 {
        2.0 * self.half_subcarriers() as f64 * self.i_dc * self.i_dc
    }

    /// Total electrical power: information plus bias.
    pub fn total_electrical_power_w(&self) -> f64 {
        self.information_power_w() + self.dc_power_w()
    }
}

/// Separable rate-sum objective in spectral-efficiency units
/// (`sum_i rate_i(p_i) / (2 N W)`); also reusable as a throughput
/// constraint.
pub struct RateObjective<'a> {
    contexts: &'a [RateContext],
    metric: RateMetric,
    scale: f64,
}

impl<'a> RateObjective<'a> {
    /// Wraps per-subcarrier contexts; `scale` converts summed rates into
    /// the caller's objective units (e.g. `1 / (2 N W)`).
    pub fn new(contexts: &'a [RateContext], metric: RateMetric, scale: f64) -> Self {
        Self {
            contexts,
            metric,
            scale,
        }
    }

    /// The wrapped rate metric.
    pub fn metric(&self) -> RateMetric {
        self.metric
    }
}

impl ConcaveSeparable for RateObjective<'_> {
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

/// Outcome of a spectral-efficiency solve.
#[derive(Debug, Clone)]
pub struct SeSolution {
    /// Optimal powers with bias accounting.
    pub allocation: PowerAllocation,
    /// Achieved spectral efficiency in bits/s/Hz over the `2NW` band.
    pub se_bits_per_s_per_hz: f64,
    /// Dual price of the weighted (optical) budget. Barrier solves report
    /// it in objective units per watt; the exact solver reports the
    /// mercury-water-filling level `lambda_1`.
    pub dual_optical: f64,
    /// Dual price of the plain (electrical) budget; see `dual_optical`.
    pub dual_electrical: f64,
    /// Optimality certificate: duality gap (barrier) or worst relative
    /// stationarity violation on active subcarriers (exact solver).
    pub kkt_residual: f64,
    /// Newton steps (barrier) or dual evaluations (exact solver).
    pub iterations: usize,
    /// How the solve ended.
    pub status: SolveStatus,
}

/// Checks that all contexts share one bandwidth and one alphabet, returning
/// `(N, W, weighted coefficients)`.
fn link_shape(contexts: &[RateContext]) -> Result<(usize, f64, Vec<f64>), SeError> {
    if contexts.is_empty() {
        return Err(SeError::InvalidLink(
            "at least one data subcarrier required".to_string(),
        ));
    }
    let bandwidth = contexts[0].bandwidth_hz();
    let points = contexts[0].constellation().points();
    for (i, ctx) in contexts.iter().enumerate() {
        if ctx.bandwidth_hz() != bandwidth {
            return Err(SeError::InvalidLink(format!(
                "subcarrier {i} bandwidth {} differs from {bandwidth}",
                ctx.bandwidth_hz()
            )));
        }
        if ctx.constellation().points() != points {
            return Err(SeError::InvalidLink(format!(
                "subcarrier {i} uses a different alphabet"
            )));
        }
    }
    let coeffs = contexts
        .iter()
        .map(|ctx| {
            let e = ctx.constellation().mean_abs();
            e * e
        })
        .collect();
    Ok((contexts.len() + 1, bandwidth, coeffs))
}

/// Maximizes spectral efficiency for a differentiable rate metric via the
/// log-barrier solver.
///
/// Intended for [`RateMetric::LowerBound`] and [`RateMetric::Approx`]
/// (which differ by a constant, hence share an allocation); the exact
/// metric also works and serves as an independent oracle for
/// [`solve_se_exact`].
pub fn solve_se(
    contexts: &[RateContext],
    metric: RateMetric,
    budgets: Budgets,
    options: &SeOptions,
) -> Result<SeSolution, SeError> {
    let (n_half, bandwidth, coeffs) = link_shape(contexts)?;
    let scale = 1.0 / (2.0 * n_half as f64 * bandwidth);
    let objective = RateObjective::new(contexts, metric, scale);
    let set = FeasibleSet {
        weighted_coeffs: coeffs,
        weighted_rhs: budgets.weighted_rhs(n_half),
        plain_rhs: budgets.plain_rhs(n_half),
        threshold: None,
        start: None,
    };
    let report = barrier::maximize_concave(&objective, &set, options.gap_tol)?;
    Ok(SeSolution {
        allocation: PowerAllocation::new(report.powers, contexts[0].constellation()),
        se_bits_per_s_per_hz: report.objective,
        dual_optical: report.dual_weighted,
        dual_electrical: report.dual_plain,
        kkt_residual: report.kkt_residual,
        iterations: report.iterations,
        status: report.status,
    })
}

/// Mercury-water-filling state shared across dual evaluations.
struct MercuryLevels<'a> {
    contexts: &'a [RateContext],
    coeffs: &'a [f64],
    snr_per_watt: Vec<f64>,
    cache: crate::rates::MmseBracketCache,
    evaluations: std::cell::Cell<usize>,
}

impl MercuryLevels<'_> {
    /// Per-subcarrier power for dual prices `(l1, l2)`: the MMSE inverse of
    /// the normalized price when reachable, zero when the price exceeds 1.
    ///
    /// A non-positive price (both duals zero) means unbounded power and is
    /// reported as infinity so budget checks reject it.
    fn powers(&self, l1: f64, l2: f64) -> Result<Vec<f64>, RateError> {
        self.evaluations.set(self.evaluations.get() + 1);
        let mut powers = Vec::with_capacity(self.contexts.len());
        for (i, ctx) in self.contexts.iter().enumerate() {
            let c = self.snr_per_watt[i];
            let price = (l1 * self.coeffs[i] + l2) / c;
            if price <= 0.0 {
                powers.push(f64::INFINITY);
            } else if price > 1.0 {
                powers.push(0.0);
            } else {
                let snr = ctx.mmse_inverse_seeded(price, &self.cache)?;
                powers.push(snr / c);
            }
        }
        Ok(powers)
    }

    /// Smallest plain-budget dual `l2 >= 0` with `sum p_i <= rhs`, plus the
    /// resulting powers. `None` rhs returns the `l2 = 0` powers directly.
    fn solve_inner(
        &self,
        l1: f64,
        plain_rhs: Option<f64>,
        tol: f64,
    ) -> Result<(f64, Vec<f64>), RateError> {
        let Some(rhs) = plain_rhs else {
            return Ok((0.0, self.powers(l1, 0.0)?));
        };
        let zero_dual = self.powers(l1, 0.0)?;
        if zero_dual.iter().sum::<f64>() <= rhs {
            return Ok((0.0, zero_dual));
        }
        let mut lo = 0.0f64;
        let mut hi = self
            .snr_per_watt
            .iter()
            .fold(0.0f64, |acc, &c| acc.max(c));
        let mut feasible = self.powers(l1, hi)?;
        debug_assert!(
            feasible.iter().sum::<f64>() <= rhs,
            "the price ceiling zeroes every subcarrier"
        );
        let mut best_dual = hi;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            let candidate = self.powers(l1, mid)?;
            if candidate.iter().sum::<f64>() <= rhs {
                hi = mid;
                best_dual = mid;
                feasible = candidate;
            } else {
                lo = mid;
            }
        }
        Ok((best_dual, feasible))
    }
}

/// Maximizes exact-metric spectral efficiency by multi-level
/// mercury-water-filling.
///
/// The weighted (optical) budget is priced by an outer bisection on
/// `lambda_1`; for each trial price an inner bisection finds the smallest
/// plain-budget price `lambda_2` that honors the electrical budget. Both
/// fast paths (`lambda_1 = 0`, `lambda_2 = 0`) are tried first since most
/// operating points leave one budget slack. Powers always come from the
/// feasible side of the bisection, so the returned allocation respects both
/// budgets.
pub fn solve_se_exact(
    contexts: &[RateContext],
    budgets: Budgets,
    options: &SeOptions,
) -> Result<SeSolution, SeError> {
    let (n_half, bandwidth, coeffs) = link_shape(contexts)?;
    let weighted_rhs = budgets.weighted_rhs(n_half);
    let plain_rhs = budgets.plain_rhs(n_half);
    if weighted_rhs.is_none() && plain_rhs.is_none() {
        return Err(SeError::InvalidLink(
            "rates increase with power, so at least one budget must be finite".to_string(),
        ));
    }
    let levels = MercuryLevels {
        contexts,
        coeffs: &coeffs,
        snr_per_watt: contexts.iter().map(RateContext::snr_per_watt).collect(),
        cache: contexts[0].mmse_bracket_cache(MMSE_CACHE_POINTS),
        evaluations: std::cell::Cell::new(0),
    };
    let weighted_usage =
        |p: &[f64]| p.iter().zip(&coeffs).map(|(&p, &a)| a * p).sum::<f64>();

    let (l1, l2, powers) = match weighted_rhs {
        None => {
            let (l2, powers) = levels.solve_inner(0.0, plain_rhs, options.inner_tol)?;
            (0.0, l2, powers)
        }
        Some(rhs) => {
            // Fast path: optical budget already slack at zero price.
            let (l2_zero, zero_price) = levels.solve_inner(0.0, plain_rhs, options.inner_tol)?;
            if zero_price.iter().all(|p| p.is_finite()) && weighted_usage(&zero_price) <= rhs {
                (0.0, l2_zero, zero_price)
            } else {
                let mut lo = 0.0f64;
                let mut hi = levels
                    .snr_per_watt
                    .iter()
                    .zip(&coeffs)
                    .fold(0.0f64, |acc, (&c, &a)| acc.max(c / a));
                let (mut best_l2, mut best) =
                    levels.solve_inner(hi, plain_rhs, options.inner_tol)?;
                debug_assert!(
                    weighted_usage(&best) <= rhs,
                    "the price ceiling zeroes every subcarrier"
                );
                let mut best_l1 = hi;
                while hi - lo > options.outer_tol {
                    let mid = 0.5 * (lo + hi);
                    let (l2_mid, candidate) =
                        levels.solve_inner(mid, plain_rhs, options.inner_tol)?;
                    if candidate.iter().all(|p| p.is_finite())
                        && weighted_usage(&candidate) <= rhs
                    {
                        hi = mid;
                        best_l1 = mid;
                        best_l2 = l2_mid;
                        best = candidate;
                    } else {
                        lo = mid;
                    }
                }
                (best_l1, best_l2, best)
            }
        }
    };

    // Stationarity check on active subcarriers: the rescaled MMSE must sit
    // on the dual price.
    let mut kkt_residual = 0.0f64;
    for (i, &p) in powers.iter().enumerate() {
        if p > 0.0 {
            let c = levels.snr_per_watt[i];
            let price = l1 * coeffs[i] + l2;
            let stationarity = c * contexts[i].mmse(c * p);
            if price > 0.0 {
                kkt_residual = kkt_residual.max((stationarity - price).abs() / price);
            }
        }
    }
    let se = powers
        .iter()
        .enumerate()
        .map(|(i, &p)| contexts[i].rate_exact(p))
        .sum::<f64>()
        / (2.0 * n_half as f64 * bandwidth);
    Ok(SeSolution {
        allocation: PowerAllocation::new(powers, contexts[0].constellation()),
        se_bits_per_s_per_hz: se,
        dual_optical: l1,
        dual_electrical: l2,
        kkt_residual,
        iterations: levels.evaluations.get(),
        status: SolveStatus::Converged,
    })
}

/// Sample statistics of the biased time-domain signal.
#[derive(Debug, Clone, Copy)]
pub struct TimeDomainStats {
    /// Smallest biased sample observed across all trials (>= 0 iff no clip).
    pub min_biased_sample_w: f64,
    /// Grand mean of the biased samples; estimates the mean optical power.
    pub mean_biased_sample_w: f64,
    /// Sum over the `2N` sample slots of the per-slot mean square;
    /// estimates the total electrical power.
    pub sum_mean_square_w: f64,
    /// Number of samples that would have clipped (biased value < 0).
    pub clipped_samples: usize,
    /// OFDM symbols simulated.
    pub trials: usize,
}

/// Monte-Carlo check of the bias and power accounting: draws `trials`
/// whole OFDM symbols (equiprobable alphabet points, Hermitian symmetry
/// folded into the real IFFT), adds the allocation's frozen bias, and
/// reports the statistics the two original constraints cap.
///
/// Requires at least 1e4 trials so the reported moments are stable to the
/// few-percent level the accompanying tolerances assume. Deterministic for
/// a fixed seed.
pub fn simulate_time_domain(
    allocation: &PowerAllocation,
    constellation: &Constellation,
    trials: usize,
    seed: u64,
) -> TimeDomainStats {
    assert!(trials >= 10_000, "need at least 1e4 symbols, got {trials}");
    let n = allocation.half_subcarriers();
    let samples = 2 * n;
    let powers = allocation.powers();
    let roots: Vec<f64> = powers.iter().map(|&p| p.sqrt()).collect();
    let amp = (2.0 / n as f64).sqrt();
    let points = constellation.points();
    let m = points.len();
    // Basis tables: cos/sin(pi k i / N) for k = 0..2N-1, i = 1..N-1.
    let mut cos_table = vec![0.0f64; samples * powers.len()];
    let mut sin_table = vec![0.0f64; samples * powers.len()];
    for k in 0..samples {
        for (j, _) in powers.iter().enumerate() {
            let angle = std::f64::consts::PI * k as f64 * (j + 1) as f64 / n as f64;
            cos_table[k * powers.len() + j] = angle.cos();
            sin_table[k * powers.len() + j] = angle.sin();
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let i_dc = allocation.i_dc();
    let mut min_sample = f64::INFINITY;
    let mut mean_acc = 0.0f64;
    let mut square_acc = vec![0.0f64; samples];
    let mut clipped = 0usize;
    let mut symbol = vec![(0.0f64, 0.0f64); powers.len()];
    for _ in 0..trials {
        for slot in symbol.iter_mut() {
            let pick = points[rng.random_range(0..m)];
            *slot = (pick.re, pick.im);
        }
        for k in 0..samples {
            let row = k * powers.len();
            let mut x = 0.0f64;
            for (j, &(re, im)) in symbol.iter().enumerate() {
                x += roots[j] * (re * cos_table[row + j] - im * sin_table[row + j]);
            }
            let x = amp * x;
            let biased = x + i_dc;
            if biased < min_sample {
                min_sample = biased;
            }
            if biased < 0.0 {
                clipped += 1;
            }
            mean_acc += biased;
            square_acc[k] += biased * biased;
        }
    }
    let denom = trials as f64;
    TimeDomainStats {
        min_biased_sample_w: min_sample,
        mean_biased_sample_w: mean_acc / (denom * samples as f64),
        sum_mean_square_w: square_acc.iter().sum::<f64>() / denom,
        clipped_samples: clipped,
        trials,
    }
}

/// Spearman rank correlation between two equally long samples.
///
/// Ties receive average ranks. Used to test whether an allocation follows
/// or opposes the channel-gain ordering.
pub fn spearman_rank_correlation(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "samples must pair up");
    assert!(x.len() >= 2, "need at least two pairs");
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mean) * (b - mean);
        var_x += (a - mean) * (a - mean);
        var_y += (b - mean) * (b - mean);
    }
    cov / (var_x0_guard(var_x) * var_x0_guard(var_y)).sqrt()
}

/// Guards a rank variance against the all-ties degenerate case.
fn var_x0_guard(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        f64::MIN_POSITIVE
    }
}

/// Average ranks (1-based) with ties sharing their mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}
