//! Achievable rates of one QAM subcarrier over complex AWGN, with the MMSE
//! machinery that drives mercury-water-filling power allocation.
//!
//! Three per-subcarrier rate metrics share a [`RateContext`]:
//!
//! - [`RateContext::rate_exact`]: the finite-alphabet mutual information,
//!   evaluated with tensor-product Gauss-Hermite quadrature and clamped to
//!   `[0, W log2 M]`.
//! - [`RateContext::rate_lower`]: a closed-form lower bound, unclamped (it is
//!   `W (1 - 1/ln2) < 0` at zero power by design).
//! - [`RateContext::rate_approx`]: the lower bound shifted up by the constant
//!   gap `C = 1/ln2 - 1` (times W), an upper approximation at medium SNR that
//!   meets the exact rate at both power extremes.
//!
//! The MMSE of conditional-mean estimation is computed from its definition
//! with the same quadrature, so the I-MMSE identity `dI/dsnr = mmse` acts as
//! an independent cross-check rather than a definition. Its inverse (by
//! residual-controlled bisection) is the mercury level of the exact-metric
//! water-filling solver.
//!
//! # Numerics
//!
//! All log-sum-exp evaluations subtract the running maximum exponent; the
//! `|Z|^2` reference term is folded into the exponents algebraically, which
//! removes the noise-only variance from the quadrature error. Quadrature
//! weights below [`WEIGHT_CULL`] are discarded and the rest renormalized to
//! unit mass, so `mmse(0) = 1` and `mutual_information_bits(0) = 0` hold to
//! machine precision.

use crate::constellation::Constellation;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::{LN_2, LOG2_E, PI};
use std::sync::Arc;
use thiserror::Error;

/// Constant gap (in bits) between the lower bound and its shifted
/// approximation: `C = 1/ln2 - 1`.
pub const CAPACITY_GAP_BITS: f64 = LOG2_E - 1.0;

/// Tensor-product weights below this threshold are culled; total discarded
/// mass stays below `order^2 * WEIGHT_CULL`, far under evaluation accuracy.
pub const WEIGHT_CULL: f64 = 1e-20;

/// Default nodes per real dimension; reproduces Monte-Carlo rates to better
/// than 1e-6 bits for 4-QAM across the operating SNR range.
pub const DEFAULT_QUAD_ORDER: usize = 32;

/// Absolute residual tolerance of [`RateContext::mmse_inverse`].
pub const MMSE_INVERSE_TOL: f64 = 1e-9;

/// Which per-subcarrier rate expression a solver optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateMetric {
    /// Finite-alphabet mutual information (quadrature).
    Exact,
    /// Closed-form lower bound.
    LowerBound,
    /// Lower bound plus the constant gap `C`.
    Approx,
}

impl std::fmt::Display for RateMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RateMetric::Exact => write!(f, "exact"),
            RateMetric::LowerBound => write!(f, "lower"),
            RateMetric::Approx => write!(f, "approx"),
        }
    }
}

/// Errors from rate-context construction and MMSE inversion.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    /// Context parameters violate their domain (noise, bandwidth, order).
    #[error("invalid rate context: {0}")]
    InvalidContext(String),
    /// The requested MMSE value is outside the reachable range (0, 1].
    #[error("mmse target {0} is outside the reachable range (0, 1]")]
    UnreachableTarget(f64),
}

/// One-dimensional Gauss-Hermite nodes and weights (physicists' convention),
/// approximating integrals against `exp(-t^2)`.
///
/// Nodes are returned in ascending order. Positive roots of the orthonormal
/// Hermite polynomial are bracketed by a sign scan at a quarter of the
/// minimal root spacing, then polished by bisection-safeguarded Newton; the
/// negative half mirrors by symmetry. This stays exact-arithmetic-free and
/// avoids hauling in a dense eigensolver for a three-term recurrence.
pub fn hermite_nodes_weights(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "quadrature order must be at least 1");
    let n = order;
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // All roots lie strictly inside [-sqrt(2n+1), sqrt(2n+1)]; adjacent roots
    // are separated by at least about pi / sqrt(2n+1).
    let t_max = (2.0 * nf + 1.0).sqrt();
    let step = PI / t_max / 4.0;
    let mut brackets = Vec::with_capacity(n.div_ceil(2));
    let mut x_prev = 0.0f64;
    let mut p_prev = hermite_eval(n, x_prev).0;
    let mut x = 0.0f64;
    while x < t_max {
        x += step;
        let p = hermite_eval(n, x).0;
        if p_prev == 0.0 {
            // Only happens at x = 0 for odd n; that root is handled directly.
        } else if p == 0.0 || p.signum() != p_prev.signum() {
            brackets.push((x_prev, x));
        }
        x_prev = x;
        p_prev = p;
    }
    assert_eq!(
        brackets.len(),
        n / 2,
        "sign scan must isolate every positive Hermite root of order {n}"
    );
    let half = n.div_ceil(2);
    for (i, &(mut a, mut b)) in brackets.iter().rev().enumerate() {
        // Invariant: the root stays inside [a, b].
        let mut pa = hermite_eval(n, a).0;
        let mut z = 0.5 * (a + b);
        for _ in 0..200 {
            let (p, d) = hermite_eval(n, z);
            if p == 0.0 {
                break;
            }
            if p.signum() == pa.signum() {
                a = z;
                pa = p;
            } else {
                b = z;
            }
            let zn = z - p / d;
            let zn = if zn > a && zn < b { zn } else { 0.5 * (a + b) };
            if (zn - z).abs() <= 1e-16 * z.abs() {
                z = zn;
                break;
            }
            z = zn;
        }
        // i counts from the largest root down; index from the array edges in.
        let (_, dp) = hermite_eval(n, z);
        let w = 2.0 / (dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        let (_, dp) = hermite_eval(n, 0.0);
        nodes[half - 1] = 0.0;
        weights[half - 1] = 2.0 / (dp * dp);
    }
    (nodes, weights)
}

/// Orthonormal Hermite polynomial and derivative at `t`:
/// `p~_{j+1} = t sqrt(2/(j+1)) p~_j - sqrt(j/(j+1)) p~_{j-1}`,
/// `p~_n' = sqrt(2n) p~_{n-1}`.
fn hermite_eval(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = PI.powf(-0.25);
    if n == 0 {
        return (p0, 0.0);
    }
    let mut p1 = std::f64::consts::SQRT_2 * t * p0;
    for j in 1..n {
        let jf = j as f64;
        let p2 = t * (2.0 / (jf + 1.0)).sqrt() * p1 - (jf / (jf + 1.0)).sqrt() * p0;
        p0 = p1;
        p1 = p2;
    }
    (p1, (2.0 * n as f64).sqrt() * p0)
}

/// Two-dimensional quadrature rule for expectations over `Z ~ CN(0, 1)`.
///
/// Tensor product of two Gauss-Hermite rules with combined weight
/// `w_x w_y / pi`, culled at [`WEIGHT_CULL`] and renormalized to unit mass.
#[derive(Debug, Clone)]
pub struct ComplexQuadrature {
    /// (Re z, Im z, weight) triples.
    nodes: Vec<(f64, f64, f64)>,
    order: usize,
}

impl ComplexQuadrature {
    /// Builds the tensor rule with `order` nodes per real dimension.
    pub fn new(order: usize) -> Self {
        let (t, w) = hermite_nodes_weights(order);
        let mut nodes = Vec::new();
        for i in 0..order {
            for j in 0..order {
                let weight = w[i] * w[j] / PI;
                if weight >= WEIGHT_CULL {
                    nodes.push((t[i], t[j], weight));
                }
            }
        }
        let total: f64 = nodes.iter().map(|&(_, _, w)| w).sum();
        for node in &mut nodes {
            node.2 /= total;
        }
        Self { nodes, order }
    }

    /// Nodes per real dimension.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of surviving tensor nodes after culling.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// True when no nodes survive (cannot happen for order >= 1).
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Monte-Carlo rate estimate with its standard error, both in bits/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    /// Sample-mean rate.
    pub rate_bits_per_s: f64,
    /// Standard error of the mean.
    pub standard_error_bits_per_s: f64,
}

/// Precomputed monotone (snr, mmse) samples used to seed the inverse search.
///
/// Purely a bracket hint: the inversion still terminates on exact quadrature
/// evaluations, so results are identical with or without a cache.
#[derive(Debug, Clone)]
pub struct MmseBracketCache {
    snrs: Vec<f64>,
    vals: Vec<f64>,
}

impl MmseBracketCache {
    /// Initial bisection bracket `[lo, hi]` around the target value.
    fn bracket(&self, target: f64) -> (f64, f64) {
        let pos = self.vals.partition_point(|&v| v > target);
        if pos == 0 {
            (0.0, self.snrs[0])
        } else if pos == self.vals.len() {
            let last = *self.snrs.last().expect("cache has at least two points");
            (last, 2.0 * last)
        } else {
            (self.snrs[pos - 1], self.snrs[pos])
        }
    }
}

/// Everything needed to evaluate one subcarrier's rates: the alphabet, the
/// squared channel gain `|H|^2`, the noise power `sigma^2 W`, the subcarrier
/// bandwidth `W`, and the quadrature rule.
///
/// All evaluation methods are pure; contexts may be shared across threads.
#[derive(Debug, Clone)]
pub struct RateContext {
    constellation: Constellation,
    gain_sq: f64,
    noise_power_w: f64,
    bandwidth_hz: f64,
    quad: Arc<ComplexQuadrature>,
    /// Flattened `X_n - X_k` differences, row-major M x M.
    deltas: Vec<Complex64>,
    /// Flattened `|X_n - X_k|^2`, row-major M x M.
    dist_sq: Vec<f64>,
    mc_samples: usize,
}

/// Default Monte-Carlo sample count when none is configured explicitly.
pub const DEFAULT_MC_SAMPLES: usize = 100_000;

impl RateContext {
    /// Builds a context with its own quadrature rule of the given order.
    pub fn new(
        constellation: Constellation,
        gain_sq: f64,
        noise_power_w: f64,
        bandwidth_hz: f64,
        quad_order: usize,
    ) -> Result<Self, RateError> {
        if quad_order < 8 {
            return Err(RateError::InvalidContext(format!(
                "quadrature order must be at least 8, got {quad_order}"
            )));
        }
        Self::with_quadrature(
            constellation,
            gain_sq,
            noise_power_w,
            bandwidth_hz,
            Arc::new(ComplexQuadrature::new(quad_order)),
        )
    }

    /// Builds a context reusing an existing quadrature rule (cheap to clone
    /// across the subcarriers of one link).
    pub fn with_quadrature(
        constellation: Constellation,
        gain_sq: f64,
        noise_power_w: f64,
        bandwidth_hz: f64,
        quad: Arc<ComplexQuadrature>,
    ) -> Result<Self, RateError> {
        if !(gain_sq.is_finite() && gain_sq > 0.0) {
            return Err(RateError::InvalidContext(format!(
                "squared channel gain must be positive, got {gain_sq}"
            )));
        }
        if !(noise_power_w.is_finite() && noise_power_w > 0.0) {
            return Err(RateError::InvalidContext(format!(
                "noise power must be positive, got {noise_power_w}"
            )));
        }
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(RateError::InvalidContext(format!(
                "bandwidth must be positive, got {bandwidth_hz}"
            )));
        }
        if quad.order() < 8 {
            return Err(RateError::InvalidContext(format!(
                "quadrature order must be at least 8, got {}",
                quad.order()
            )));
        }
        let m = constellation.order();
        let pts = constellation.points();
        let mut deltas = Vec::with_capacity(m * m);
        for n in 0..m {
            for k in 0..m {
                deltas.push(pts[n] - pts[k]);
            }
        }
        let dist_sq = constellation.pairwise_sq_distances();
        Ok(Self {
            constellation,
            gain_sq,
            noise_power_w,
            bandwidth_hz,
            quad,
            deltas,
            dist_sq,
            mc_samples: DEFAULT_MC_SAMPLES,
        })
    }

    /// Sets the default Monte-Carlo sample count for the oracle.
    pub fn with_mc_samples(mut self, samples: usize) -> Self {
        self.mc_samples = samples;
        self
    }

    /// The subcarrier's alphabet.
    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    /// Squared channel gain `|H|^2`.
    pub fn gain_sq(&self) -> f64 {
        self.gain_sq
    }

    /// Noise power `sigma^2 W`.
    pub fn noise_power_w(&self) -> f64 {
        self.noise_power_w
    }

    /// Subcarrier bandwidth `W` in Hz.
    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    /// Shared quadrature rule.
    pub fn quadrature(&self) -> &Arc<ComplexQuadrature> {
        &self.quad
    }

    /// Configured Monte-Carlo sample count.
    pub fn mc_samples(&self) -> usize {
        self.mc_samples
    }

    /// SNR produced by one watt: `|H|^2 / (sigma^2 W)`.
    pub fn snr_per_watt(&self) -> f64 {
        self.gain_sq / self.noise_power_w
    }

    /// Mutual information in bits per channel use at the given SNR
    /// (unclamped; may carry +-1 ulp of dust at the extremes).
    pub fn mutual_information_bits(&self, snr: f64) -> f64 {
        self.moments(snr).0
    }

    /// Conditional-mean estimation error `E{|X - E[X|Y]|^2}` at the given
    /// SNR; decreases from 1 at snr = 0 towards 0.
    pub fn mmse(&self, snr: f64) -> f64 {
        self.moments(snr).1
    }

    /// Shared quadrature sweep producing mutual information (bits) and MMSE.
    ///
    /// Exponents are `-snr |d_nk|^2 - 2 sqrt(snr) Re(d_nk conj z)`, i.e. the
    /// `|z|^2` reference is already folded in; the `k = n` term is exactly 0,
    /// which anchors the log-sum-exp maximum.
    fn moments(&self, snr: f64) -> (f64, f64) {
        debug_assert!(snr >= 0.0, "snr must be non-negative");
        let m = self.constellation.order();
        let pts = self.constellation.points();
        if snr == 0.0 {
            // The posterior equals the uniform prior: zero information, and
            // the conditional mean is the prior mean. Returning the exact
            // endpoint keeps p = 0 free of quadrature rounding dust.
            let mean = pts.iter().sum::<Complex64>() / m as f64;
            return (0.0, self.constellation.mean_sq() - mean.norm_sqr());
        }
        let root = snr.sqrt();
        let mut ex = vec![0.0f64; m];
        let mut nats_deficit = 0.0;
        let mut mmse_acc = 0.0;
        for n in 0..m {
            let drow = &self.deltas[n * m..(n + 1) * m];
            let dsq = &self.dist_sq[n * m..(n + 1) * m];
            for &(zr, zi, w) in &self.quad.nodes {
                let mut emax = f64::NEG_INFINITY;
                for k in 0..m {
                    let e = -snr * dsq[k] - 2.0 * root * (drow[k].re * zr + drow[k].im * zi);
                    ex[k] = e;
                    if e > emax {
                        emax = e;
                    }
                }
                let mut sum = 0.0;
                let mut xr = 0.0;
                let mut xi = 0.0;
                for k in 0..m {
                    let v = (ex[k] - emax).exp();
                    sum += v;
                    xr += v * pts[k].re;
                    xi += v * pts[k].im;
                }
                nats_deficit += w * (emax + sum.ln());
                let inv = 1.0 / sum;
                let er = pts[n].re - xr * inv;
                let ei = pts[n].im - xi * inv;
                mmse_acc += w * (er * er + ei * ei);
            }
        }
        let mf = m as f64;
        let mi_bits = self.constellation.bits_per_symbol() - nats_deficit / (mf * LN_2);
        (mi_bits, mmse_acc / mf)
    }

    /// Exact finite-alphabet rate in bits/s, clamped to `[0, W log2 M]`.
    pub fn rate_exact(&self, p: f64) -> f64 {
        assert!(p >= 0.0, "power must be non-negative, got {p}");
        let ceiling = self.bandwidth_hz * self.constellation.bits_per_symbol();
        (self.bandwidth_hz * self.mutual_information_bits(self.snr_per_watt() * p))
            .clamp(0.0, ceiling)
    }

    /// Closed-form lower bound in bits/s; NOT clamped (equals
    /// `W (1 - 1/ln2) < 0` at p = 0).
    pub fn rate_lower(&self, p: f64) -> f64 {
        assert!(p >= 0.0, "power must be non-negative, got {p}");
        let (ln_sum, _, _) = self.lower_bound_stats(self.snr_per_watt() * p);
        let m = self.constellation.order() as f64;
        self.bandwidth_hz
            * (self.constellation.bits_per_symbol() + 1.0 - LOG2_E - ln_sum / (m * LN_2))
    }

    /// Constant-gap approximation `rate_lower + C W` in bits/s.
    pub fn rate_approx(&self, p: f64) -> f64 {
        self.rate_lower(p) + CAPACITY_GAP_BITS * self.bandwidth_hz
    }

    /// Selected metric's rate in bits/s.
    pub fn rate(&self, metric: RateMetric, p: f64) -> f64 {
        match metric {
            RateMetric::Exact => self.rate_exact(p),
            RateMetric::LowerBound => self.rate_lower(p),
            RateMetric::Approx => self.rate_approx(p),
        }
    }

    /// Derivative of the exact rate with respect to power, bits/s per watt:
    /// `W log2(e) a mmse(a p)` with `a = |H|^2 / sigma^2 W`.
    pub fn rate_exact_gradient(&self, p: f64) -> f64 {
        let a = self.snr_per_watt();
        self.bandwidth_hz * LOG2_E * a * self.mmse(a * p)
    }

    /// Derivative of the lower bound with respect to power (closed form).
    pub fn rate_lower_gradient(&self, p: f64) -> f64 {
        let a = self.snr_per_watt();
        let (_, grad, _) = self.lower_bound_stats(a * p);
        let m = self.constellation.order() as f64;
        self.bandwidth_hz * a * grad / (m * LN_2)
    }

    /// Selected metric's rate derivative, bits/s per watt.
    pub fn rate_gradient(&self, metric: RateMetric, p: f64) -> f64 {
        match metric {
            RateMetric::Exact => self.rate_exact_gradient(p),
            RateMetric::LowerBound | RateMetric::Approx => self.rate_lower_gradient(p),
        }
    }

    /// Second derivative of the exact rate (via a guarded finite difference
    /// of the MMSE; used only to scale Newton steps, never for optimality).
    pub fn rate_exact_curvature(&self, p: f64) -> f64 {
        let a = self.snr_per_watt();
        let s = a * p;
        let h = (s.abs() * 1e-4).max(1e-7);
        let lo = (s - h).max(0.0);
        let hi = s + h;
        let slope = (self.mmse(hi) - self.mmse(lo)) / (hi - lo);
        (self.bandwidth_hz * LOG2_E * a * a * slope).min(0.0)
    }

    /// Second derivative of the lower bound (closed form, non-positive).
    pub fn rate_lower_curvature(&self, p: f64) -> f64 {
        let a = self.snr_per_watt();
        let (_, _, var) = self.lower_bound_stats(a * p);
        let m = self.constellation.order() as f64;
        -self.bandwidth_hz * a * a * var / (m * LN_2)
    }

    /// Selected metric's rate curvature.
    pub fn rate_curvature(&self, metric: RateMetric, p: f64) -> f64 {
        match metric {
            RateMetric::Exact => self.rate_exact_curvature(p),
            RateMetric::LowerBound | RateMetric::Approx => self.rate_lower_curvature(p),
        }
    }

    /// `(Sum_n ln S_n, Sum_n S_n'/S_n scale, Sum_n Var_n)` for the lower
    /// bound and its derivatives, where `S_n(s) = Sum_k exp(-s d_nk^2 / 2)`.
    fn lower_bound_stats(&self, s: f64) -> (f64, f64, f64) {
        let m = self.constellation.order();
        let mut ln_acc = 0.0;
        let mut grad_acc = 0.0;
        let mut var_acc = 0.0;
        for n in 0..m {
            let dsq = &self.dist_sq[n * m..(n + 1) * m];
            let mut sum = 0.0;
            let mut first = 0.0;
            let mut second = 0.0;
            for &d in dsq {
                let h = 0.5 * d;
                let v = (-s * h).exp();
                sum += v;
                first += v * h;
                second += v * h * h;
            }
            let mean = first / sum;
            ln_acc += sum.ln();
            grad_acc += mean;
            var_acc += second / sum - mean * mean;
        }
        (ln_acc, grad_acc, var_acc)
    }

    /// Monotone (snr, mmse) table used to seed [`Self::mmse_inverse_seeded`].
    ///
    /// Spans snr in `[1e-8, 1e8]` on a log grid. Build once per solve and
    /// share across subcarriers with the same alphabet and quadrature.
    pub fn mmse_bracket_cache(&self, points: usize) -> MmseBracketCache {
        let points = points.max(2);
        let (lo, hi) = (1e-8f64.ln(), 1e8f64.ln());
        let mut snrs = Vec::with_capacity(points);
        let mut vals = Vec::with_capacity(points);
        for idx in 0..points {
            let s = (lo + (hi - lo) * idx as f64 / (points - 1) as f64).exp();
            snrs.push(s);
            vals.push(self.mmse(s));
        }
        MmseBracketCache { snrs, vals }
    }

    /// Inverse MMSE: the snr at which `mmse(snr) = target`, within
    /// [`MMSE_INVERSE_TOL`] absolute on the residual.
    ///
    /// `target = 1` maps to exactly 0; targets outside `(0, 1]` are
    /// unreachable for a discrete alphabet at finite snr.
    pub fn mmse_inverse(&self, target: f64) -> Result<f64, RateError> {
        self.mmse_inverse_impl(target, None)
    }

    /// [`Self::mmse_inverse`] seeded with a bracket cache; identical result,
    /// fewer quadrature evaluations.
    pub fn mmse_inverse_seeded(
        &self,
        target: f64,
        cache: &MmseBracketCache,
    ) -> Result<f64, RateError> {
        self.mmse_inverse_impl(target, Some(cache))
    }

    fn mmse_inverse_impl(
        &self,
        target: f64,
        cache: Option<&MmseBracketCache>,
    ) -> Result<f64, RateError> {
        if !target.is_finite() || target <= 0.0 || target > 1.0 {
            return Err(RateError::UnreachableTarget(target));
        }
        if target >= 1.0 {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = match cache {
            Some(c) => {
                let (l, h) = c.bracket(target);
                // The cache is a hint; re-establish the invariant exactly.
                (if self.mmse(l) >= target { l } else { 0.0 }, h)
            }
            None => (0.0, 1.0),
        };
        let mut grew = 0usize;
        while self.mmse(hi) > target {
            lo = hi;
            hi *= 2.0;
            grew += 1;
            // The exponents underflow long before this; keep hi finite regardless.
            assert!(grew < 1000, "mmse target {target} not bracketed below snr {hi}");
        }
        for _ in 0..4000 {
            let mid = 0.5 * (lo + hi);
            let v = self.mmse(mid);
            if (v - target).abs() <= MMSE_INVERSE_TOL {
                return Ok(mid);
            }
            if v > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * mid.max(f64::MIN_POSITIVE) {
                return Ok(mid);
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Monte-Carlo estimate of the exact rate from `samples` noise draws
    /// (`Z ~ CN(0, sigma^2 W)`), cycling symbols deterministically.
    ///
    /// Used as an independent oracle in tests; intended for
    /// `samples >= 1e4`. Same seed and sample count give bit-identical
    /// results.
    pub fn rate_mc_oracle(&self, p: f64, samples: usize, seed: u64) -> McEstimate {
        assert!(p >= 0.0, "power must be non-negative, got {p}");
        assert!(samples >= 2, "need at least 2 samples for a standard error");
        let m = self.constellation.order();
        let snr = self.snr_per_watt() * p;
        let root = snr.sqrt();
        let log2m = self.constellation.bits_per_symbol();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut ex = vec![0.0f64; m];
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for t in 0..samples {
            let n = t % m;
            let g1: f64 = StandardNormal.sample(&mut rng);
            let g2: f64 = StandardNormal.sample(&mut rng);
            let zr = g1 * std::f64::consts::FRAC_1_SQRT_2;
            let zi = g2 * std::f64::consts::FRAC_1_SQRT_2;
            let drow = &self.deltas[n * m..(n + 1) * m];
            let dsq = &self.dist_sq[n * m..(n + 1) * m];
            let mut emax = f64::NEG_INFINITY;
            for k in 0..m {
                let e = -snr * dsq[k] - 2.0 * root * (drow[k].re * zr + drow[k].im * zi);
                ex[k] = e;
                if e > emax {
                    emax = e;
                }
            }
            let lse: f64 = ex.iter().map(|&e| (e - emax).exp()).sum::<f64>().ln() + emax;
            let v = log2m - lse / LN_2;
            sum += v;
            sum_sq += v * v;
        }
        let nf = samples as f64;
        let mean = sum / nf;
        let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
        McEstimate {
            rate_bits_per_s: self.bandwidth_hz * mean,
            standard_error_bits_per_s: self.bandwidth_hz * (var / nf).sqrt(),
        }
    }
}
