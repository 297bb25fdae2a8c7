//! Finite-alphabet rate computation and power allocation for DC-biased
//! optical OFDM (DCO-OFDM) intensity-modulation links.
//!
//! The crate models an indoor optical wireless downlink in which a real,
//! non-negative time-domain OFDM waveform is obtained from Hermitian-symmetric
//! QAM subcarriers plus a DC bias. It provides:
//!
//! - [`constellation`]: unit-energy square QAM alphabets and their moments.
//! - [`channel`]: Lambertian line-of-sight plus diffuse frequency responses.
//! - [`rates`]: exact mutual-information rates via Gauss-Hermite quadrature,
//!   a closed-form lower bound, a constant-gap approximation, the MMSE
//!   function and its inverse, and a Monte-Carlo oracle.
//! - [`barrier`]: a log-barrier interior-point maximizer for concave
//!   separable objectives over the link's linear/convex feasible sets.
//! - [`se`]: spectral-efficiency maximization (interior-point for the
//!   bound metrics, multi-level mercury-water-filling for the exact metric)
//!   plus DC-bias accounting and time-domain constraint simulation.
//! - [`ee`]: energy-efficiency maximization via a Dinkelbach iteration with
//!   an optional minimum spectral-efficiency constraint.
//!
//! # Conventions
//!
//! Powers are electrical watts into a unit load, gains are dimensionless
//! photocurrent ratios, and `N` always denotes half the IFFT length: data
//! rides on subcarriers `1..N-1`, with indices `0` and `N` blocked and
//! `N+1..2N-1` their Hermitian mirror.

pub mod barrier;
pub mod channel;
pub mod constellation;
pub mod ee;
pub mod rates;
pub mod se;
