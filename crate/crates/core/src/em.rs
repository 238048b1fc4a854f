//! Media, plate geometry, the incident plane wave and the receiver array.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cartesian point or direction in meters.
pub type Vec3 = Vector3<f64>;
/// Complex phasor vector (field quantities).
pub type CVec3 = Vector3<Complex64>;

/// Free-space impedance used when a configuration does not specify one.
pub const DEFAULT_IMPEDANCE: f64 = 377.0;

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {value}")))
    }
}

fn check_non_negative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be non-negative and finite, got {value}")))
    }
}

/// Homogeneous propagation medium at a single frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    wavelength: f64,
    wavenumber: f64,
    impedance: f64,
}

impl Medium {
    pub fn new(wavelength: f64, impedance: f64) -> Result<Self> {
        check_positive("wavelength", wavelength)?;
        check_positive("impedance", impedance)?;
        Ok(Self {
            wavelength,
            wavenumber: TAU / wavelength,
            impedance,
        })
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn impedance(&self) -> f64 {
        self.impedance
    }
}

/// Rectangular plate in the `z = 0` plane, centered on the origin.
///
/// Degenerate (zero-length) sides are allowed and integrate to zero.
/// `length_y` is the side along `e_y`, `length_x` the side along `e_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RisAperture {
    length_y: f64,
    length_x: f64,
}

impl RisAperture {
    pub fn new(length_y: f64, length_x: f64) -> Result<Self> {
        check_non_negative("aperture.length_y", length_y)?;
        check_non_negative("aperture.length_x", length_x)?;
        Ok(Self { length_y, length_x })
    }

    /// A square plate of side `side`.
    pub fn square(side: f64) -> Result<Self> {
        Self::new(side, side)
    }

    pub fn length_y(&self) -> f64 {
        self.length_y
    }

    pub fn length_x(&self) -> f64 {
        self.length_x
    }

    pub fn area(&self) -> f64 {
        self.length_x * self.length_y
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x.abs() <= 0.5 * self.length_x && y.abs() <= 0.5 * self.length_y
    }
}

/// Far-field source illuminating the plate with a TM-x plane wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidentWave {
    e0: f64,
    theta_in: f64,
    source_distance: f64,
    source_magnitude: f64,
    tx_power: f64,
    tx_gain: f64,
}

impl IncidentWave {
    /// Builds the wave from the field amplitude at the plate.
    ///
    /// The disturbance magnitude is `A = E0 * l` and the transmit power is
    /// the one satisfying `A^2 = P_t G_t eta / (2 pi)`.
    pub fn new(
        e0: f64,
        theta_in: f64,
        source_distance: f64,
        tx_gain: f64,
        medium: &Medium,
    ) -> Result<Self> {
        check_positive("incident.e0", e0)?;
        check_positive("incident.source_distance", source_distance)?;
        check_positive("incident.tx_gain", tx_gain)?;
        check_theta_in(theta_in)?;
        let source_magnitude = e0 * source_distance;
        let tx_power = TAU * source_magnitude * source_magnitude / (tx_gain * medium.impedance());
        Ok(Self {
            e0,
            theta_in,
            source_distance,
            source_magnitude,
            tx_power,
            tx_gain,
        })
    }

    /// Builds the wave from the transmitter side (`P_t`, `G_t`, `l`).
    pub fn from_transmitter(
        tx_power: f64,
        tx_gain: f64,
        theta_in: f64,
        source_distance: f64,
        medium: &Medium,
    ) -> Result<Self> {
        check_positive("incident.tx_power", tx_power)?;
        check_positive("incident.tx_gain", tx_gain)?;
        check_positive("incident.source_distance", source_distance)?;
        check_theta_in(theta_in)?;
        let source_magnitude = (tx_power * tx_gain * medium.impedance() / TAU).sqrt();
        Ok(Self {
            e0: source_magnitude / source_distance,
            theta_in,
            source_distance,
            source_magnitude,
            tx_power,
            tx_gain,
        })
    }

    /// Like [`IncidentWave::new`] but also checks an explicitly supplied
    /// transmit power against the derived one.
    pub fn with_explicit_tx_power(
        e0: f64,
        theta_in: f64,
        source_distance: f64,
        tx_gain: f64,
        tx_power: f64,
        medium: &Medium,
    ) -> Result<Self> {
        let wave = Self::new(e0, theta_in, source_distance, tx_gain, medium)?;
        let rel = (wave.tx_power - tx_power).abs() / wave.tx_power;
        if !(rel <= 1e-9) {
            return Err(Error::invalid(
                "incident.tx_power_w",
                format!(
                    "inconsistent with e0, tx_gain and source_distance (expected {:.9e} W, got {tx_power:.9e} W)",
                    wave.tx_power
                ),
            ));
        }
        Ok(wave)
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn theta_in(&self) -> f64 {
        self.theta_in
    }

    pub fn source_distance(&self) -> f64 {
        self.source_distance
    }

    /// Far-field disturbance magnitude `A` (volts).
    pub fn source_magnitude(&self) -> f64 {
        self.source_magnitude
    }

    pub fn tx_power(&self) -> f64 {
        self.tx_power
    }

    pub fn tx_gain(&self) -> f64 {
        self.tx_gain
    }

    /// Returns a copy with a different field amplitude and everything else
    /// re-derived.
    pub fn with_e0(&self, e0: f64, medium: &Medium) -> Result<Self> {
        Self::new(e0, self.theta_in, self.source_distance, self.tx_gain, medium)
    }

    /// Returns a copy with a different incidence angle.
    pub fn with_theta_in(&self, theta_in: f64) -> Result<Self> {
        check_theta_in(theta_in)?;
        Ok(Self { theta_in, ..*self })
    }

    /// Complex amplitude of `E_x` of the incident wave on the plate at `y`.
    pub fn plate_field(&self, y: f64, medium: &Medium) -> Complex64 {
        let phase = -medium.wavenumber() * self.theta_in.sin() * y;
        Complex64::from_polar(self.e0, phase)
    }
}

fn check_theta_in(theta_in: f64) -> Result<()> {
    if theta_in.is_finite() && (0.0..0.5 * PI).contains(&theta_in) {
        Ok(())
    } else {
        Err(Error::invalid(
            "incident.theta_in",
            format!("must lie in [0, pi/2), got {theta_in}"),
        ))
    }
}

/// Uniform linear receiver array.
///
/// The array rotates by `attitude_phi` away from `e_x` towards `e_z`, i.e.
/// within the plane perpendicular to `e_y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UlaReceiver {
    num_antennas: usize,
    length: f64,
    center: Vec3,
    attitude_phi: f64,
    rx_gain: f64,
}

impl UlaReceiver {
    pub fn new(
        num_antennas: usize,
        length: f64,
        center: Vec3,
        attitude_phi: f64,
        rx_gain: f64,
    ) -> Result<Self> {
        if num_antennas == 0 {
            return Err(Error::invalid("receiver.num_antennas", "must be at least 1"));
        }
        if !(length.is_finite() && length >= 0.0) {
            return Err(Error::invalid(
                "receiver.length",
                format!("must be non-negative, got {length}"),
            ));
        }
        if !center.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("receiver.center", "must be finite"));
        }
        if !attitude_phi.is_finite() {
            return Err(Error::invalid("receiver.attitude_phi", "must be finite"));
        }
        check_positive("receiver.rx_gain", rx_gain)?;
        Ok(Self {
            num_antennas,
            length,
            center,
            attitude_phi,
            rx_gain,
        })
    }

    /// Single isotropic-gain antenna at `center`.
    pub fn single(center: Vec3, rx_gain: f64) -> Result<Self> {
        Self::new(1, 0.0, center, 0.0, rx_gain)
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn attitude_phi(&self) -> f64 {
        self.attitude_phi
    }

    pub fn rx_gain(&self) -> f64 {
        self.rx_gain
    }

    /// Same array moved to a new center.
    pub fn moved_to(&self, center: Vec3) -> Self {
        Self {
            center,
            ..self.clone()
        }
    }

    /// Same array rotated to a new attitude.
    pub fn rotated_to(&self, attitude_phi: f64) -> Self {
        Self {
            attitude_phi,
            ..self.clone()
        }
    }

    /// Unit vector along the array axis.
    pub fn axis(&self) -> Vec3 {
        let (s, c) = self.attitude_phi.sin_cos();
        Vec3::new(c, 0.0, s)
    }

    /// Signed offset of antenna `m` (1-based) from the center along the axis.
    pub fn offset(&self, m: usize) -> Result<f64> {
        if m == 0 || m > self.num_antennas {
            return Err(Error::IndexOutOfRange {
                index: m,
                len: self.num_antennas,
            });
        }
        if self.num_antennas == 1 {
            return Ok(0.0);
        }
        let frac = (m - 1) as f64 / (self.num_antennas - 1) as f64;
        Ok(self.length * (frac - 0.5))
    }

    /// All antenna positions in order `m = 1..=M`.
    pub fn positions(&self) -> Vec<Vec3> {
        (1..=self.num_antennas)
            .map(|m| antenna_position(self, m).expect("index within range"))
            .collect()
    }
}

/// Position of antenna `m` (1-based) of the array.
pub fn antenna_position(rx: &UlaReceiver, m: usize) -> Result<Vec3> {
    let offset = rx.offset(m)?;
    Ok(rx.center + rx.axis() * offset)
}

/// Lower and upper distance of the radiating near-field region of the plate.
///
/// Both bounds are returned even when the lower one exceeds the upper one;
/// in that case the region does not exist.
pub fn radiating_near_field_bounds(aperture: &RisAperture, medium: &Medium) -> (f64, f64) {
    let diag2 = aperture.length_y().powi(2) + aperture.length_x().powi(2);
    let lambda = medium.wavelength();
    let d_min = 0.62 * (diag2.powf(1.5) / lambda).sqrt();
    let d_max = 2.0 * diag2 / lambda;
    (d_min, d_max)
}

/// Electric and magnetic field of the incident plane wave at `point`.
pub fn incident_fields(wave: &IncidentWave, medium: &Medium, point: &Vec3) -> (CVec3, CVec3) {
    let (s, c) = wave.theta_in().sin_cos();
    let k = medium.wavenumber();
    let phasor = Complex64::from_polar(1.0, -k * (s * point.y - c * point.z));
    let e = phasor * wave.e0();
    let h = phasor * (-wave.e0() / medium.impedance());
    let zero = Complex64::new(0.0, 0.0);
    (
        CVec3::new(e, zero, zero),
        CVec3::new(zero, h * c, h * s),
    )
}

/// Propagation direction of the incident wave.
pub fn incident_direction(wave: &IncidentWave) -> Vec3 {
    let (s, c) = wave.theta_in().sin_cos();
    Vec3::new(0.0, s, -c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference_medium() -> Medium {
        Medium::new(0.1, 377.0).unwrap()
    }

    #[test]
    fn wavenumber_derivation() {
        let m = reference_medium();
        assert_relative_eq!(m.wavenumber() * m.wavelength(), TAU, max_relative = 1e-15);
        assert!(Medium::new(-0.1, 377.0).is_err());
        assert!(Medium::new(0.1, 0.0).is_err());
    }

    #[test]
    fn near_field_bounds_reference_plate() {
        let m = reference_medium();
        let ap = RisAperture::square(20.0 * 0.1).unwrap();
        let (lo, hi) = radiating_near_field_bounds(&ap, &m);
        assert!((lo / 0.1 - 93.263).abs() < 0.01, "{}", lo / 0.1);
        assert_relative_eq!(hi / 0.1, 1600.0, max_relative = 1e-12);
    }

    #[test]
    fn near_field_bounds_large_plate() {
        let m = Medium::new(0.01, 377.0).unwrap();
        let ap = RisAperture::square(2.0).unwrap();
        let (lo, hi) = radiating_near_field_bounds(&ap, &m);
        assert!((lo - 29.492).abs() < 1e-3, "{lo}");
        assert_relative_eq!(hi, 1600.0, max_relative = 1e-12);
    }

    #[test]
    fn near_field_bounds_shrink_with_aperture() {
        let m = reference_medium();
        let ap = RisAperture::square(1e-9).unwrap();
        let (lo, hi) = radiating_near_field_bounds(&ap, &m);
        assert!(lo < 1e-10 && hi < 1e-15);
    }

    proptest! {
        #[test]
        fn near_field_upper_bound_scales_quadratically(a in 0.1f64..5.0, b in 0.1f64..5.0, c in 0.5f64..4.0) {
            let m = reference_medium();
            let (_, hi) = radiating_near_field_bounds(&RisAperture::new(a, b).unwrap(), &m);
            let (_, hi_c) = radiating_near_field_bounds(&RisAperture::new(c * a, c * b).unwrap(), &m);
            prop_assert!((hi_c - c * c * hi).abs() <= 1e-12 * hi_c);
        }

        #[test]
        fn incident_fields_transverse(theta_deg in 0.0f64..89.0, y in -5.0f64..5.0, z in -5.0f64..5.0) {
            let m = reference_medium();
            let w = IncidentWave::new(1.0, theta_deg.to_radians(), 1000.0, 3.0, &m).unwrap();
            let (e, h) = incident_fields(&w, &m, &Vec3::new(0.3, y, z));
            let dir = incident_direction(&w);
            let dot_eh: Complex64 = e.iter().zip(h.iter()).map(|(a, b)| a * b).sum();
            let dot_ed: Complex64 = e.iter().zip(dir.iter()).map(|(a, b)| a * b).sum();
            let dot_hd: Complex64 = h.iter().zip(dir.iter()).map(|(a, b)| a * b).sum();
            let scale = e.norm() * h.norm();
            prop_assert!(dot_eh.norm() < 1e-12 * scale);
            prop_assert!(dot_ed.norm() < 1e-12 * e.norm());
            prop_assert!(dot_hd.norm() < 1e-12 * h.norm());
            prop_assert!((e.norm() / h.norm() - m.impedance()).abs() < 1e-9 * m.impedance());
        }

        #[test]
        fn ula_spacing_uniform(mm in 2usize..200, len in 0.1f64..10.0, phi in -3.0f64..3.0) {
            let rx = UlaReceiver::new(mm, len, Vec3::new(0.2, 3.0, 4.0), phi, 1.0).unwrap();
            let pos = rx.positions();
            let step = len / (mm - 1) as f64;
            for w in pos.windows(2) {
                prop_assert!(((w[1] - w[0]).norm() - step).abs() <= 1e-12 * step.max(1.0));
            }
        }
    }

    #[test]
    fn normal_incidence_at_origin() {
        let m = reference_medium();
        let w = IncidentWave::new(2.0, 0.0, 1000.0, 1.0, &m).unwrap();
        let (e, h) = incident_fields(&w, &m, &Vec3::zeros());
        assert_relative_eq!(e.x.re, 2.0);
        assert_eq!(e.y, Complex64::new(0.0, 0.0));
        assert_relative_eq!(h.y.re, -2.0 / 377.0);
        assert_relative_eq!(h.z.norm(), 0.0);
    }

    #[test]
    fn oblique_incidence_phase() {
        let m = reference_medium();
        let w = IncidentWave::new(1.0, 30f64.to_radians(), 1000.0, 1.0, &m).unwrap();
        let (e, _) = incident_fields(&w, &m, &Vec3::new(0.0, 0.1, 0.0));
        // -2 pi sin 30 = -pi; arg() folds onto +-pi.
        assert!((e.x.arg().abs() - PI).abs() < 1e-12);
        assert_relative_eq!(e.x.re, -1.0, max_relative = 1e-12);
    }

    #[test]
    fn source_magnitude_identity() {
        let m = reference_medium();
        let w = IncidentWave::new(1.0, 0.5, 1000.0, 3.1622776601683795, &m).unwrap();
        let a2 = w.source_magnitude().powi(2);
        let rhs = w.tx_power() * w.tx_gain() * m.impedance() / TAU;
        assert_relative_eq!(a2, rhs, max_relative = 1e-15);

        let w2 = IncidentWave::from_transmitter(w.tx_power(), w.tx_gain(), 0.5, 1000.0, &m).unwrap();
        assert_relative_eq!(w2.e0(), 1.0, max_relative = 1e-14);

        assert!(IncidentWave::with_explicit_tx_power(1.0, 0.5, 1000.0, w.tx_gain(), w.tx_power(), &m).is_ok());
        assert!(
            IncidentWave::with_explicit_tx_power(1.0, 0.5, 1000.0, w.tx_gain(), 2.0 * w.tx_power(), &m)
                .is_err()
        );
    }

    #[test]
    fn theta_in_range_checked() {
        let m = reference_medium();
        assert!(IncidentWave::new(1.0, 0.5 * PI, 1000.0, 1.0, &m).is_err());
        assert!(IncidentWave::new(1.0, -0.1, 1000.0, 1.0, &m).is_err());
    }

    #[test]
    fn antenna_layout() {
        let c = Vec3::new(0.0, 5.0, 5.0);
        let single = UlaReceiver::new(1, 3.0, c, 0.7, 1.0).unwrap();
        assert_eq!(antenna_position(&single, 1).unwrap(), c);

        let pair = UlaReceiver::new(2, 1.0, c, 0.0, 1.0).unwrap();
        assert_relative_eq!(antenna_position(&pair, 1).unwrap(), Vec3::new(-0.5, 5.0, 5.0));
        assert_relative_eq!(antenna_position(&pair, 2).unwrap(), Vec3::new(0.5, 5.0, 5.0));

        let tri = UlaReceiver::new(3, 2.0, c, 0.5 * PI, 1.0).unwrap();
        let p = tri.positions();
        assert_relative_eq!(p[0], Vec3::new(0.0, 5.0, 4.0), epsilon = 1e-15);
        assert_relative_eq!(p[1], Vec3::new(0.0, 5.0, 5.0), epsilon = 1e-15);
        assert_relative_eq!(p[2], Vec3::new(0.0, 5.0, 6.0), epsilon = 1e-15);

        assert!(antenna_position(&tri, 0).is_err());
        assert!(antenna_position(&tri, 4).is_err());
    }
}
