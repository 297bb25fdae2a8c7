//! Unit-energy complex constellations and their moment statistics.
//!
//! Every constellation is normalized to unit mean square, `E{|X|^2} = 1`, so
//! a subcarrier's allocated power scales its symbol energy directly. The
//! cached moments feed the optical-power accounting downstream: `mean_abs`
//! (i.e. `E{|X|}`) enters the average-optical-power constraint and `max_abs`
//! the worst-case non-clipping DC bias.
//!
//! # Invariants
//!
//! - `E{|X|^2} = 1` within 1e-12 after construction.
//! - Square QAM sets are closed under negation, so `E{X} = 0` exactly.

use num_complex::Complex64;
use thiserror::Error;

/// Errors from constellation construction.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstellationError {
    /// Requested QAM order is not a perfect square of at least 4.
    #[error("QAM order must be a perfect square >= 4, got {0}")]
    InvalidOrder(usize),
    /// A custom alphabet had fewer than two points or zero energy.
    #[error("alphabet is degenerate: {0}")]
    DegenerateAlphabet(String),
}

/// A finite, equiprobable complex alphabet with precomputed moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    mean_abs: f64,
    mean_sq: f64,
    max_abs: f64,
}

impl Constellation {
    /// Builds a square M-QAM constellation normalized to unit mean square.
    ///
    /// `order` must be a perfect square with `order >= 4` (4, 16, 36, 64, ...).
    /// When the side length is a power of two the in-phase and quadrature
    /// levels are visited in reflected-Gray order; the labeling is cosmetic
    /// because every quantity here averages over the full alphabet.
    pub fn make_qam(order: usize) -> Result<Self, ConstellationError> {
        let side = (order as f64).sqrt().round() as usize;
        if order < 4 || side * side != order {
            return Err(ConstellationError::InvalidOrder(order));
        }
        let level = |idx: usize| -> f64 {
            let g = if side.is_power_of_two() { idx ^ (idx >> 1) } else { idx };
            2.0 * g as f64 - (side - 1) as f64
        };
        let mut points = Vec::with_capacity(order);
        for i in 0..side {
            for j in 0..side {
                points.push(Complex64::new(level(i), level(j)));
            }
        }
        Self::from_points(points)
    }

    /// Wraps an arbitrary alphabet, rescaling it to unit mean square.
    ///
    /// Intended as the extension hook for non-QAM alphabets; the rest of the
    /// crate only relies on the moment accessors, never on QAM structure.
    pub fn from_points(points: Vec<Complex64>) -> Result<Self, ConstellationError> {
        if points.len() < 2 {
            return Err(ConstellationError::DegenerateAlphabet(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        let raw_mean_sq = points.iter().map(|x| x.norm_sqr()).sum::<f64>() / points.len() as f64;
        if !(raw_mean_sq.is_finite() && raw_mean_sq > 0.0) {
            return Err(ConstellationError::DegenerateAlphabet(
                "alphabet mean square must be positive and finite".into(),
            ));
        }
        let scale = raw_mean_sq.sqrt().recip();
        let points: Vec<Complex64> = points.into_iter().map(|x| x * scale).collect();
        let m = points.len() as f64;
        let mean_abs = points.iter().map(|x| x.norm()).sum::<f64>() / m;
        let mean_sq = points.iter().map(|x| x.norm_sqr()).sum::<f64>() / m;
        let max_abs = points.iter().map(|x| x.norm()).fold(0.0, f64::max);
        Ok(Self { points, mean_abs, mean_sq, max_abs })
    }

    /// The normalized alphabet points.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Alphabet size M.
    pub fn order(&self) -> usize {
        self.points.len()
    }

    /// Bits per symbol, `log2(M)`.
    pub fn bits_per_symbol(&self) -> f64 {
        (self.order() as f64).log2()
    }

    /// First absolute moment `E{|X|}`.
    pub fn mean_abs(&self) -> f64 {
        self.mean_abs
    }

    /// Second moment `E{|X|^2}`; equals 1 within 1e-12 by construction.
    pub fn mean_sq(&self) -> f64 {
        self.mean_sq
    }

    /// Peak modulus `max_k |X_k|`.
    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    /// Flattened row-major M x M matrix of squared distances `|X_n - X_k|^2`.
    ///
    /// Symmetric with a zero diagonal; row `n` occupies `[n*M, (n+1)*M)`.
    pub fn pairwise_sq_distances(&self) -> Vec<f64> {
        let m = self.points.len();
        let mut d = vec![0.0; m * m];
        for n in 0..m {
            for k in 0..m {
                d[n * m + k] = (self.points[n] - self.points[k]).norm_sqr();
            }
        }
        d
    }
}
