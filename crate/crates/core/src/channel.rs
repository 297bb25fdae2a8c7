//! Frequency response of an indoor optical wireless downlink.
//!
//! Each luminaire contributes a Lambertian line-of-sight (LOS) path, and room
//! reflections contribute a diffuse path modeled as a first-order low-pass
//! (integrating-sphere) response. Subcarrier gains are the sum of the
//! selected LOS paths and the diffuse term, mirrored with Hermitian symmetry
//! so the time-domain signal is real.
//!
//! Geometry convention: luminaires point straight down (-z) and the receiver
//! looks straight up (+z); irradiance and incidence angles are measured from
//! those axes. The LOS gain is exactly zero beyond the receiver field of view.
//!
//! # Units
//!
//! Positions in metres, areas in m^2, volumes in m^3, angles in degrees at
//! the API surface, frequencies in Hz, delays in seconds. Gains are
//! dimensionless photocurrent ratios.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Errors from channel-model validation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    /// A parameter is outside its physical domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// The geometry collapses a path length or angle to an undefined value.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
}

/// Rectangular room with ceiling luminaires and a single receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomGeometry {
    /// Interior dimensions (x, y, z) in metres.
    pub dimensions_m: [f64; 3],
    /// Luminaire positions in metres.
    pub led_positions_m: Vec<[f64; 3]>,
    /// Receiver position in metres.
    pub receiver_position_m: [f64; 3],
    /// Mean wall reflectivity, strictly inside (0, 1).
    pub reflectivity: f64,
}

impl RoomGeometry {
    /// Total interior surface area `2(xy + xz + yz)` in m^2.
    pub fn surface_area_m2(&self) -> f64 {
        let [x, y, z] = self.dimensions_m;
        2.0 * (x * y + x * z + y * z)
    }

    /// Interior volume in m^3.
    pub fn volume_m3(&self) -> f64 {
        let [x, y, z] = self.dimensions_m;
        x * y * z
    }

    fn validate(&self) -> Result<(), ChannelError> {
        if self.dimensions_m.iter().any(|&d| !(d.is_finite() && d > 0.0)) {
            return Err(ChannelError::InvalidParameter(format!(
                "room dimensions must be positive, got {:?}",
                self.dimensions_m
            )));
        }
        if !(self.reflectivity > 0.0 && self.reflectivity < 1.0) {
            return Err(ChannelError::InvalidParameter(format!(
                "reflectivity must lie in (0, 1), got {}",
                self.reflectivity
            )));
        }
        if self.led_positions_m.is_empty() {
            return Err(ChannelError::InvalidParameter("at least one luminaire is required".into()));
        }
        let inside = |p: &[f64; 3]| {
            p.iter().zip(self.dimensions_m.iter()).all(|(&c, &d)| c >= 0.0 && c <= d)
        };
        for (idx, led) in self.led_positions_m.iter().enumerate() {
            if !inside(led) {
                return Err(ChannelError::InvalidParameter(format!(
                    "luminaire {idx} at {led:?} lies outside the room"
                )));
            }
        }
        if !inside(&self.receiver_position_m) {
            return Err(ChannelError::InvalidParameter(format!(
                "receiver at {:?} lies outside the room",
                self.receiver_position_m
            )));
        }
        Ok(())
    }
}

/// Emitter beam shape and receiver optics shared by all luminaires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalFrontEnd {
    /// Transmitter semi-angle at half power, degrees, in (0, 90).
    pub semi_angle_half_power_deg: f64,
    /// Physical photodetector area, m^2.
    pub detector_area_m2: f64,
    /// Receiver field of view half-angle, degrees, in (0, 90].
    pub field_of_view_deg: f64,
    /// Optical filter gain, linear.
    pub filter_gain: f64,
    /// Optical concentrator gain, linear.
    pub concentrator_gain: f64,
}

impl OpticalFrontEnd {
    /// Lambertian order `m = -ln2 / ln(cos(semi-angle))`; 60 degrees gives 1.
    pub fn lambertian_order(&self) -> f64 {
        -std::f64::consts::LN_2 / self.semi_angle_half_power_deg.to_radians().cos().ln()
    }

    fn validate(&self) -> Result<(), ChannelError> {
        if !(self.semi_angle_half_power_deg > 0.0 && self.semi_angle_half_power_deg < 90.0) {
            return Err(ChannelError::InvalidParameter(format!(
                "semi-angle must lie in (0, 90) degrees, got {}",
                self.semi_angle_half_power_deg
            )));
        }
        if !(self.detector_area_m2 > 0.0 && self.detector_area_m2.is_finite()) {
            return Err(ChannelError::InvalidParameter(format!(
                "detector area must be positive, got {}",
                self.detector_area_m2
            )));
        }
        if !(self.field_of_view_deg > 0.0 && self.field_of_view_deg <= 90.0) {
            return Err(ChannelError::InvalidParameter(format!(
                "field of view must lie in (0, 90] degrees, got {}",
                self.field_of_view_deg
            )));
        }
        if !(self.filter_gain > 0.0 && self.concentrator_gain > 0.0) {
            return Err(ChannelError::InvalidParameter(
                "filter and concentrator gains must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Which line-of-sight paths enter the aggregate subcarrier gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LosAggregation {
    /// Coherent sum over every luminaire.
    AllLuminaires,
    /// A single luminaire by index (useful for per-path inspection).
    Single(usize),
}

/// Propagation-model switches.
///
/// `diffuse_per_luminaire` controls whether the diffuse response is counted
/// once per luminaire (each source pumps the reflecting surfaces, consistent
/// with the coherent LOS sum) or once per room. The per-luminaire convention
/// is the default; the per-room variant is kept for comparison studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelOptions {
    /// LOS paths included in the sum.
    pub los: LosAggregation,
    /// Count the diffuse response once per contributing luminaire.
    pub diffuse_per_luminaire: bool,
    /// Include the diffuse path at all.
    pub include_diffuse: bool,
}

impl Default for ChannelOptions {
    fn default() -> Self {
        Self { los: LosAggregation::AllLuminaires, diffuse_per_luminaire: true, include_diffuse: true }
    }
}

/// Hermitian-symmetric subcarrier gains of one link realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGains {
    gains: Vec<Complex64>,
    half_subcarriers: usize,
    subcarrier_spacing_hz: f64,
}

impl ChannelGains {
    /// Half the IFFT length, N; data occupies indices `1..N-1`.
    pub fn half_subcarriers(&self) -> usize {
        self.half_subcarriers
    }

    /// Subcarrier spacing (equal to the per-subcarrier bandwidth W), Hz.
    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.subcarrier_spacing_hz
    }

    /// Complex gain of subcarrier `i` for `i` in `0..2N`.
    pub fn gain(&self, i: usize) -> Complex64 {
        self.gains[i]
    }

    /// Gains of the data-bearing subcarriers `1..N-1` in index order.
    pub fn data_gains(&self) -> &[Complex64] {
        &self.gains[1..self.half_subcarriers]
    }

    /// All `2N` gains, including the blocked and mirrored entries.
    pub fn all_gains(&self) -> &[Complex64] {
        &self.gains
    }
}

/// DC gain of one luminaire's LOS path; exactly zero outside the field of view.
pub fn los_dc_gain(
    geometry: &RoomGeometry,
    front_end: &OpticalFrontEnd,
    led_index: usize,
) -> Result<f64, ChannelError> {
    geometry.validate()?;
    front_end.validate()?;
    let led = geometry.led_positions_m.get(led_index).ok_or_else(|| {
        ChannelError::InvalidParameter(format!(
            "luminaire index {led_index} out of range (have {})",
            geometry.led_positions_m.len()
        ))
    })?;
    let rx = &geometry.receiver_position_m;
    let diff = [rx[0] - led[0], rx[1] - led[1], rx[2] - led[2]];
    let dist_sq = diff.iter().map(|d| d * d).sum::<f64>();
    if dist_sq == 0.0 {
        return Err(ChannelError::DegenerateGeometry(
            "receiver coincides with a luminaire".into(),
        ));
    }
    let dist = dist_sq.sqrt();
    // Irradiance angle at the emitter (axis -z) and incidence at the receiver (axis +z).
    let cos_irradiance = -diff[2] / dist;
    let cos_incidence = -diff[2] / dist;
    if cos_irradiance <= 0.0 || cos_incidence <= 0.0 {
        return Ok(0.0);
    }
    if cos_incidence < front_end.field_of_view_deg.to_radians().cos() {
        return Ok(0.0);
    }
    let m = front_end.lambertian_order();
    Ok((m + 1.0) * front_end.detector_area_m2 * cos_incidence / (2.0 * PI * dist_sq)
        * cos_irradiance.powf(m)
        * front_end.filter_gain
        * front_end.concentrator_gain)
}

/// Complex LOS gain of one luminaire at frequency `f_hz` (DC gain with the
/// propagation-delay phase `exp(-j 2 pi f d / c)`).
pub fn los_gain(
    geometry: &RoomGeometry,
    front_end: &OpticalFrontEnd,
    led_index: usize,
    f_hz: f64,
) -> Result<Complex64, ChannelError> {
    let dc = los_dc_gain(geometry, front_end, led_index)?;
    let led = &geometry.led_positions_m[led_index];
    let rx = &geometry.receiver_position_m;
    let dist = led.iter().zip(rx.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let delay_s = dist / SPEED_OF_LIGHT_M_S;
    Ok(Complex64::from_polar(dc, -2.0 * PI * f_hz * delay_s))
}

/// Diffuse-path DC gain `(A_r / A_room) * rho / (1 - rho)`.
pub fn diffuse_dc_gain(
    geometry: &RoomGeometry,
    front_end: &OpticalFrontEnd,
) -> Result<f64, ChannelError> {
    geometry.validate()?;
    front_end.validate()?;
    let rho = geometry.reflectivity;
    Ok(front_end.detector_area_m2 / geometry.surface_area_m2() * rho / (1.0 - rho))
}

/// Exponential decay time of the diffuse field, `-4V / (A_room c ln rho)`.
pub fn diffuse_time_constant_s(geometry: &RoomGeometry) -> Result<f64, ChannelError> {
    geometry.validate()?;
    Ok(-(4.0 * geometry.volume_m3())
        / (geometry.surface_area_m2() * SPEED_OF_LIGHT_M_S * geometry.reflectivity.ln()))
}

/// Complex diffuse-path gain at frequency `f_hz`: a one-pole low-pass
/// `eta_d / (1 + j 2 pi f tau)`.
pub fn diffuse_gain(
    geometry: &RoomGeometry,
    front_end: &OpticalFrontEnd,
    f_hz: f64,
) -> Result<Complex64, ChannelError> {
    let eta = diffuse_dc_gain(geometry, front_end)?;
    let tau = diffuse_time_constant_s(geometry)?;
    Ok(Complex64::new(eta, 0.0) / Complex64::new(1.0, 2.0 * PI * f_hz * tau))
}

/// Aggregate gains of all `2N` subcarriers at frequencies `f_i = i * spacing`.
///
/// Index `i` in `0..=N` is computed directly; indices `N+1..2N-1` are the
/// conjugate mirror `H_{2N-i} = conj(H_i)` required for a real waveform.
/// Entries 0 and N are filled for completeness but carry no data.
pub fn subcarrier_gains(
    geometry: &RoomGeometry,
    front_end: &OpticalFrontEnd,
    options: &ChannelOptions,
    half_subcarriers: usize,
    subcarrier_spacing_hz: f64,
) -> Result<ChannelGains, ChannelError> {
    geometry.validate()?;
    front_end.validate()?;
    if half_subcarriers < 2 {
        return Err(ChannelError::InvalidParameter(format!(
            "need at least 2 half-subcarriers for one data subcarrier, got {half_subcarriers}"
        )));
    }
    if !(subcarrier_spacing_hz > 0.0 && subcarrier_spacing_hz.is_finite()) {
        return Err(ChannelError::InvalidParameter(format!(
            "subcarrier spacing must be positive, got {subcarrier_spacing_hz}"
        )));
    }
    let led_indices: Vec<usize> = match options.los {
        LosAggregation::AllLuminaires => (0..geometry.led_positions_m.len()).collect(),
        LosAggregation::Single(idx) => {
            if idx >= geometry.led_positions_m.len() {
                return Err(ChannelError::InvalidParameter(format!(
                    "luminaire index {idx} out of range (have {})",
                    geometry.led_positions_m.len()
                )));
            }
            vec![idx]
        }
    };
    let diffuse_count = if !options.include_diffuse {
        0.0
    } else if options.diffuse_per_luminaire {
        led_indices.len() as f64
    } else {
        1.0
    };

    let n = half_subcarriers;
    let mut gains = vec![Complex64::new(0.0, 0.0); 2 * n];
    for i in 0..=n {
        let f = i as f64 * subcarrier_spacing_hz;
        let mut h = Complex64::new(0.0, 0.0);
        for &led in &led_indices {
            h += los_gain(geometry, front_end, led, f)?;
        }
        if diffuse_count > 0.0 {
            h += diffuse_gain(geometry, front_end, f)? * diffuse_count;
        }
        gains[i] = h;
        if i >= 1 && i <= n - 1 {
            gains[2 * n - i] = h.conj();
        }
    }
    Ok(ChannelGains { gains, half_subcarriers: n, subcarrier_spacing_hz })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS_EXACT: f64 = 1e-12;
    // Frozen magnitudes were produced by an independent implementation of the
    // same closed-form model; agreement is limited only by summation order.
    const EPS_CROSS_IMPL: f64 = 1e-9;

    fn reference_room() -> RoomGeometry {
        RoomGeometry {
            dimensions_m: [5.0, 5.0, 3.0],
            led_positions_m: vec![
                [1.5, 1.5, 3.0],
                [1.5, 3.5, 3.0],
                [3.5, 1.5, 3.0],
                [3.5, 3.5, 3.0],
            ],
            receiver_position_m: [0.5, 1.0, 0.0],
            reflectivity: 0.8,
        }
    }

    fn reference_front_end() -> OpticalFrontEnd {
        OpticalFrontEnd {
            semi_angle_half_power_deg: 60.0,
            detector_area_m2: 1e-4,
            field_of_view_deg: 90.0,
            filter_gain: 1.0,
            concentrator_gain: 1.0,
        }
    }

    #[test]
    fn lambertian_order_at_sixty_degrees_is_one() {
        let fe = reference_front_end();
        assert!(
            (fe.lambertian_order() - 1.0).abs() < EPS_EXACT,
            "cos(60 deg) = 1/2 makes the order exactly 1, got {}",
            fe.lambertian_order()
        );
    }

    #[test]
    fn diffuse_dc_gain_matches_closed_form() {
        let room = reference_room();
        let fe = reference_front_end();
        let expected = 1e-4 / 110.0 * 0.8 / 0.2;
        let eta = diffuse_dc_gain(&room, &fe).expect("valid geometry");
        assert!(
            ((eta - expected) / expected).abs() < EPS_EXACT,
            "diffuse DC gain {eta} should equal A_r/A_room * rho/(1-rho) = {expected}"
        );
    }

    #[test]
    fn diffuse_time_constant_matches_closed_form() {
        let room = reference_room();
        let expected = -(4.0 * 75.0) / (110.0 * SPEED_OF_LIGHT_M_S * 0.8f64.ln());
        let tau = diffuse_time_constant_s(&room).expect("valid geometry");
        assert!(
            ((tau - expected) / expected).abs() < EPS_EXACT,
            "diffuse time constant {tau} s should be {expected} s"
        );
    }

    #[test]
    fn los_dc_gain_matches_hand_computation() {
        let room = reference_room();
        let fe = reference_front_end();
        // First luminaire: offset (1, 0.5, 3), d^2 = 10.25, cos = 3/sqrt(10.25).
        let dist_sq: f64 = 10.25;
        let cos = 3.0 / dist_sq.sqrt();
        let expected = 2.0 * 1e-4 * cos * cos / (2.0 * PI * dist_sq);
        let g = los_dc_gain(&room, &fe, 0).expect("valid geometry");
        assert!(
            ((g - expected) / expected).abs() < EPS_EXACT,
            "LOS DC gain {g} should match the m=1 Lambertian formula {expected}"
        );
    }

    #[test]
    fn reference_gain_magnitudes_match_frozen_values() {
        let gains = subcarrier_gains(
            &reference_room(),
            &reference_front_end(),
            &ChannelOptions::default(),
            16,
            1e6,
        )
        .expect("reference scenario is valid");
        for (i, expected) in [
            (1usize, 1.919269738e-5),
            (2, 1.791738155e-5),
            (3, 1.637389706e-5),
            (4, 1.491092280e-5),
            (8, 1.116777869e-5),
            (15, 8.710364791e-6),
        ] {
            let got = gains.gain(i).norm();
            assert!(
                ((got - expected) / expected).abs() < EPS_CROSS_IMPL,
                "|H_{i}| = {got}, frozen reference {expected}"
            );
        }
    }

    #[test]
    fn per_room_diffuse_variant_matches_frozen_values() {
        let options = ChannelOptions { diffuse_per_luminaire: false, ..Default::default() };
        let gains =
            subcarrier_gains(&reference_room(), &reference_front_end(), &options, 16, 1e6)
                .expect("reference scenario is valid");
        for (i, expected) in [(1usize, 8.649913033e-6), (15, 5.977556965e-6)] {
            let got = gains.gain(i).norm();
            assert!(
                ((got - expected) / expected).abs() < EPS_CROSS_IMPL,
                "per-room diffuse |H_{i}| = {got}, frozen reference {expected}"
            );
        }
    }

    #[test]
    fn reference_magnitudes_decrease_with_subcarrier_index() {
        let gains = subcarrier_gains(
            &reference_room(),
            &reference_front_end(),
            &ChannelOptions::default(),
            16,
            1e6,
        )
        .expect("reference scenario is valid");
        for i in 1..15 {
            assert!(
                gains.gain(i).norm() > gains.gain(i + 1).norm(),
                "low-pass response: |H_{i}| should exceed |H_{}|",
                i + 1
            );
        }
    }

    #[test]
    fn mirror_subcarriers_are_exact_conjugates() {
        let gains = subcarrier_gains(
            &reference_room(),
            &reference_front_end(),
            &ChannelOptions::default(),
            16,
            1e6,
        )
        .expect("reference scenario is valid");
        let n = gains.half_subcarriers();
        for i in 1..n {
            assert_eq!(
                gains.gain(2 * n - i),
                gains.gain(i).conj(),
                "Hermitian symmetry must hold bit-exactly by construction"
            );
        }
    }

    #[test]
    fn gain_is_exactly_zero_outside_field_of_view() {
        let mut room = reference_room();
        room.led_positions_m = vec![[4.5, 4.5, 3.0]];
        let fe = OpticalFrontEnd { field_of_view_deg: 10.0, ..reference_front_end() };
        let g = los_dc_gain(&room, &fe, 0).expect("valid geometry");
        assert_eq!(g, 0.0, "incidence of about 60 degrees lies far outside a 10 degree FOV");
    }

    #[test]
    fn receiver_on_luminaire_is_degenerate() {
        let mut room = reference_room();
        room.receiver_position_m = [1.5, 1.5, 3.0];
        match los_dc_gain(&room, &reference_front_end(), 0) {
            Err(ChannelError::DegenerateGeometry(_)) => {}
            other => panic!("zero-distance path must be degenerate, got {other:?}"),
        }
    }

    #[test]
    fn reflectivity_outside_open_interval_is_rejected() {
        for rho in [0.0, 1.0, 1.2, -0.3] {
            let room = RoomGeometry { reflectivity: rho, ..reference_room() };
            match diffuse_dc_gain(&room, &reference_front_end()) {
                Err(ChannelError::InvalidParameter(_)) => {}
                other => panic!("reflectivity {rho} must be rejected, got {other:?}"),
            }
        }
    }

    #[test]
    fn positions_outside_room_are_rejected() {
        let mut room = reference_room();
        room.receiver_position_m = [6.0, 1.0, 0.0];
        assert!(
            matches!(
                subcarrier_gains(
                    &room,
                    &reference_front_end(),
                    &ChannelOptions::default(),
                    16,
                    1e6
                ),
                Err(ChannelError::InvalidParameter(_))
            ),
            "receiver outside the room must fail validation"
        );
    }

    #[test]
    fn single_los_path_without_diffuse_has_flat_magnitude() {
        let options = ChannelOptions {
            los: LosAggregation::Single(0),
            include_diffuse: false,
            diffuse_per_luminaire: false,
        };
        let gains =
            subcarrier_gains(&reference_room(), &reference_front_end(), &options, 16, 1e6)
                .expect("reference scenario is valid");
        let base = gains.gain(1).norm();
        for i in 2..16 {
            assert!(
                ((gains.gain(i).norm() - base) / base).abs() < EPS_EXACT,
                "a pure delay has constant magnitude across frequency"
            );
        }
    }
}
