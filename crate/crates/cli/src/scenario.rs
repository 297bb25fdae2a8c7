//! Scenario files: the single source of truth for an experiment run.
//!
//! A scenario is a JSON document with explicit units in every key name
//! (`_m`, `_w`, `_hz`, `_deg`, ...), because the quantities span watts,
//! milliwatts, and megahertz and silent unit mismatches are the dominant
//! failure mode in this kind of experiment. Unknown keys are rejected.
//!
//! Unbounded budgets are written as `{"unbounded": true}` rather than a
//! sentinel number, so a forgotten value fails validation instead of
//! silently running with an implausible cap.
//!
//! Loading, saving, and reloading a scenario is lossless; the canonical
//! serialization also feeds the SHA-256 hash stamped into every CSV the
//! harness writes, which ties each output file to the exact configuration
//! that produced it.

use lightlink_core::channel::{
    subcarrier_gains, ChannelGains, ChannelOptions, OpticalFrontEnd, RoomGeometry,
};
use lightlink_core::constellation::Constellation;
use lightlink_core::ee::EeOptions;
use lightlink_core::rates::RateContext;
use lightlink_core::se::{Budgets, SeOptions};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

/// Room, luminaire, and receiver placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Interior dimensions (x, y, z) in meters.
    pub room_dimensions_m: [f64; 3],
    /// Luminaire positions in meters.
    pub led_positions_m: Vec<[f64; 3]>,
    /// Receiver position in meters.
    pub receiver_position_m: [f64; 3],
    /// Mean wall reflectivity in (0, 1).
    pub wall_reflectivity: f64,
}

/// Emitter pattern and detector optics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontEnd {
    /// Emitter semi-angle at half power, degrees.
    pub semi_angle_half_power_deg: f64,
    /// Physical detector area in square meters.
    pub detector_area_m2: f64,
    /// Receiver field of view (half-angle), degrees.
    pub field_of_view_deg: f64,
    /// Optical filter gain.
    #[serde(default = "default_unit_gain")]
    pub filter_gain: f64,
    /// Concentrator gain.
    #[serde(default = "default_unit_gain")]
    pub concentrator_gain: f64,
}

fn default_unit_gain() -> f64 {
    1.0
}

/// Link-level parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct System {
    /// Half the IFFT length; data rides on subcarriers `1..N-1`.
    pub half_subcarriers: usize,
    /// Subcarrier spacing (and per-subcarrier bandwidth) in hertz.
    pub subcarrier_bandwidth_hz: f64,
    /// Noise power per subcarrier band in watts.
    pub noise_power_w: f64,
    /// QAM order (perfect square, at least 4).
    pub modulation_order: usize,
    /// Constant circuit power draw in watts.
    pub circuit_power_w: f64,
}

/// Propagation-model switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    /// Add the diffuse (reflected) component to the line of sight.
    #[serde(default = "default_true")]
    pub include_diffuse: bool,
    /// Count the diffuse component once per luminaire rather than once per
    /// room.
    #[serde(default = "default_true")]
    pub diffuse_per_luminaire: bool,
}

fn default_true() -> bool {
    true
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            include_diffuse: true,
            diffuse_per_luminaire: true,
        }
    }
}

/// A power budget: either a finite cap in watts or explicitly unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Budget {
    /// Finite cap in watts.
    Finite(f64),
    /// Explicit absence of a cap; the flag must be `true`.
    Unbounded {
        /// Always `true`; `false` would be ambiguous.
        unbounded: bool,
    },
}

impl Budget {
    /// Converts to the solver representation, validating the encoding.
    pub fn to_cap_w(self, name: &str) -> Result<Option<f64>, String> {
        match self {
            Budget::Finite(v) if v.is_finite() && v > 0.0 => Ok(Some(v)),
            Budget::Finite(v) => Err(format!("{name} must be positive and finite, got {v}")),
            Budget::Unbounded { unbounded: true } => Ok(None),
            Budget::Unbounded { unbounded: false } => Err(format!(
                "{name}: write a number instead of \"unbounded\": false"
            )),
        }
    }
}

/// One operating point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    /// Mean optical power cap.
    pub optical_budget_w: Budget,
    /// Total electrical power cap.
    pub electrical_budget_w: Budget,
    /// Minimum spectral efficiency in bits/s/Hz (0 disables).
    #[serde(default)]
    pub se_threshold_bits_per_s_per_hz: f64,
}

impl SweepPoint {
    /// Solver budgets for this point.
    pub fn budgets(&self) -> Result<Budgets, String> {
        Ok(Budgets {
            optical_w: self.optical_budget_w.to_cap_w("optical_budget_w")?,
            electrical_w: self
                .electrical_budget_w
                .to_cap_w("electrical_budget_w")?,
        })
    }
}

/// Numerical knobs with experiment-wide defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Gauss-Hermite order per axis for exact-rate integrals.
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
    /// Duality-gap tolerance of the interior-point solver.
    #[serde(default = "default_gap_tol")]
    pub gap_tol: f64,
    /// Outer (optical-price) bisection tolerance of the exact solver.
    #[serde(default = "default_outer_tol")]
    pub outer_tol: f64,
    /// Inner (electrical-price) bisection tolerance of the exact solver.
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    /// Stopping tolerance on the normalized efficiency ratio.
    #[serde(default = "default_ratio_tol")]
    pub ratio_tol: f64,
    /// Cap on efficiency-ratio iterations.
    #[serde(default = "default_max_ratio_iterations")]
    pub max_ratio_iterations: usize,
    /// Seed for every randomized component (simulation draws).
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// OFDM symbols drawn by the tightness verification.
    #[serde(default = "default_tightness_trials")]
    pub tightness_trials: usize,
}

fn default_quad_order() -> usize {
    32
}
fn default_gap_tol() -> f64 {
    1e-8
}
fn default_outer_tol() -> f64 {
    1e-9
}
fn default_inner_tol() -> f64 {
    1e-10
}
fn default_ratio_tol() -> f64 {
    1e-8
}
fn default_max_ratio_iterations() -> usize {
    100
}
fn default_seed() -> u64 {
    1
}
fn default_tightness_trials() -> usize {
    10_000
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            quad_order: default_quad_order(),
            gap_tol: default_gap_tol(),
            outer_tol: default_outer_tol(),
            inner_tol: default_inner_tol(),
            ratio_tol: default_ratio_tol(),
            max_ratio_iterations: default_max_ratio_iterations(),
            seed: default_seed(),
            tightness_trials: default_tightness_trials(),
        }
    }
}

/// A full experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Room and placement.
    pub geometry: Geometry,
    /// Optics.
    pub front_end: FrontEnd,
    /// Link parameters.
    pub system: System,
    /// Propagation-model switches.
    #[serde(default)]
    pub channel_model: ChannelModel,
    /// Operating points to run (may be empty: header-only output).
    #[serde(default)]
    pub sweep: Vec<SweepPoint>,
    /// Numerical knobs.
    #[serde(default)]
    pub solver: SolverConfig,
}

impl Scenario {
    /// Loads and validates a scenario file.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let scenario: Scenario = serde_json::from_str(&text)
            .map_err(|e| format!("cannot parse {}: {e}", path.display()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Canonical pretty serialization with a trailing newline.
    pub fn canonical_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("scenario serialization cannot fail");
        text.push('\n');
        text
    }

    /// SHA-256 of the canonical serialization, as lowercase hex.
    pub fn sha256(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Cross-field validation beyond what deserialization enforces. The
    /// geometry, front end, link size, and bandwidth are validated by
    /// building the channel once, so the rules stay in one place.
    pub fn validate(&self) -> Result<(), String> {
        self.channel_gains_for(self.system.half_subcarriers)?;
        if !(self.system.noise_power_w > 0.0) || !self.system.noise_power_w.is_finite() {
            return Err(format!(
                "noise_power_w must be positive, got {}",
                self.system.noise_power_w
            ));
        }
        if !(self.system.circuit_power_w > 0.0) || !self.system.circuit_power_w.is_finite() {
            return Err(format!(
                "circuit_power_w must be positive, got {}",
                self.system.circuit_power_w
            ));
        }
        Constellation::make_qam(self.system.modulation_order).map_err(|e| e.to_string())?;
        if self.solver.quad_order < 8 {
            return Err(format!(
                "quad_order must be at least 8, got {}",
                self.solver.quad_order
            ));
        }
        for (i, point) in self.sweep.iter().enumerate() {
            point
                .budgets()
                .map_err(|e| format!("sweep point {i}: {e}"))?;
            let gamma = point.se_threshold_bits_per_s_per_hz;
            if !gamma.is_finite() || gamma < 0.0 {
                return Err(format!(
                    "sweep point {i}: se_threshold_bits_per_s_per_hz must be \
                     finite and non-negative, got {gamma}"
                ));
            }
        }
        Ok(())
    }

    /// Geometry in solver form.
    pub fn room(&self) -> RoomGeometry {
        RoomGeometry {
            dimensions_m: self.geometry.room_dimensions_m,
            led_positions_m: self.geometry.led_positions_m.clone(),
            receiver_position_m: self.geometry.receiver_position_m,
            reflectivity: self.geometry.wall_reflectivity,
        }
    }

    /// Front end in solver form.
    pub fn front_end_model(&self) -> OpticalFrontEnd {
        OpticalFrontEnd {
            semi_angle_half_power_deg: self.front_end.semi_angle_half_power_deg,
            detector_area_m2: self.front_end.detector_area_m2,
            field_of_view_deg: self.front_end.field_of_view_deg,
            filter_gain: self.front_end.filter_gain,
            concentrator_gain: self.front_end.concentrator_gain,
        }
    }

    /// Channel-model switches in solver form.
    pub fn channel_options(&self) -> ChannelOptions {
        ChannelOptions {
            include_diffuse: self.channel_model.include_diffuse,
            diffuse_per_luminaire: self.channel_model.diffuse_per_luminaire,
            ..ChannelOptions::default()
        }
    }

    /// The modulation alphabet.
    pub fn constellation(&self) -> Constellation {
        Constellation::make_qam(self.system.modulation_order)
            .expect("validated on load")
    }

    /// Frequency-domain channel gains for `half_subcarriers`, or for an
    /// explicit override (used by the scaling benchmark).
    pub fn channel_gains_for(&self, n_half: usize) -> Result<ChannelGains, String> {
        subcarrier_gains(
            &self.room(),
            &self.front_end_model(),
            &self.channel_options(),
            n_half,
            self.system.subcarrier_bandwidth_hz,
        )
        .map_err(|e| e.to_string())
    }

    /// Per-subcarrier rate contexts at the given quadrature order.
    pub fn rate_contexts_for(
        &self,
        n_half: usize,
        quad_order: usize,
    ) -> Result<Vec<RateContext>, String> {
        let gains = self.channel_gains_for(n_half)?;
        let constellation = self.constellation();
        gains
            .data_gains()
            .iter()
            .map(|h| {
                RateContext::new(
                    constellation.clone(),
                    h.norm_sqr(),
                    self.system.noise_power_w,
                    self.system.subcarrier_bandwidth_hz,
                    quad_order,
                )
                .map_err(|e| e.to_string())
            })
            .collect()
    }

    /// Spectral-efficiency solver options.
    pub fn se_options(&self) -> SeOptions {
        SeOptions {
            gap_tol: self.solver.gap_tol,
            outer_tol: self.solver.outer_tol,
            inner_tol: self.solver.inner_tol,
        }
    }

    /// Energy-efficiency solver options.
    pub fn ee_options(&self) -> EeOptions {
        EeOptions {
            se: self.se_options(),
            ratio_tol: self.solver.ratio_tol,
            max_iterations: self.solver.max_ratio_iterations,
        }
    }
}
