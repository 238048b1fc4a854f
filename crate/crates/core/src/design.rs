//! Reflection-coefficient synthesis `Gamma(x, y) = tau(x, y) exp(j beta(x, y))`.
//!
//! Three strategies are provided:
//!
//! * **planar**: a linear phase gradient steering the incident plane wave
//!   into a reflected plane wave (`tau = 1`);
//! * **cylindrical**: the time-reversed field of an infinite line current
//!   on a focal line parallel to `e_x`, so the reflected wave converges on
//!   that line. The current magnitude follows from equating incident and
//!   reflected power;
//! * **spherical**: the time-reversed field of a point source at a focal
//!   point, normalized through the solid angle the plate subtends there.
//!
//! Phases are wrapped to `(-pi, pi]`. Amplitudes of the focusing designs are
//! not clipped and may exceed one.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::em::{IncidentWave, Medium, RisAperture, Vec3};
use crate::error::{Error, Result};
use crate::quadrature::SurfaceGrid;
use crate::special::{hankel2, BesselOrder};

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let r = phase.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Removes `2 pi` jumps between consecutive samples.
pub fn unwrap_phase(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let prev = phases[i - 1];
            let jump = p - prev;
            if jump > PI {
                offset -= TAU * ((jump + PI) / TAU).floor();
            } else if jump < -PI {
                offset += TAU * ((-jump + PI) / TAU).floor();
            }
        }
        out.push(p + offset);
    }
    out
}

/// Focal line parallel to `e_x` through `(0, f_y, f_z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FocalLine {
    f_y: f64,
    f_z: f64,
}

impl FocalLine {
    pub fn new(f_y: f64, f_z: f64) -> Result<Self> {
        if !f_y.is_finite() || !(f_z.is_finite() && f_z > 0.0) {
            return Err(Error::Geometry(format!(
                "focal line must lie above the plate (f_y={f_y}, f_z={f_z})"
            )));
        }
        Ok(Self { f_y, f_z })
    }

    pub fn f_y(&self) -> f64 {
        self.f_y
    }

    pub fn f_z(&self) -> f64 {
        self.f_z
    }

    /// Distance from plate point `(x, y, 0)` to the line; independent of `x`.
    pub fn distance(&self, y: f64) -> f64 {
        (y - self.f_y).hypot(self.f_z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FocalPoint {
    f_x: f64,
    f_y: f64,
    f_z: f64,
}

impl FocalPoint {
    pub fn new(f_x: f64, f_y: f64, f_z: f64) -> Result<Self> {
        if !f_x.is_finite() || !f_y.is_finite() || !(f_z.is_finite() && f_z > 0.0) {
            return Err(Error::Geometry(format!(
                "focal point must lie above the plate ({f_x}, {f_y}, {f_z})"
            )));
        }
        Ok(Self { f_x, f_y, f_z })
    }

    pub fn from_vec(p: &Vec3) -> Result<Self> {
        Self::new(p.x, p.y, p.z)
    }

    pub fn f_x(&self) -> f64 {
        self.f_x
    }

    pub fn f_y(&self) -> f64 {
        self.f_y
    }

    pub fn f_z(&self) -> f64 {
        self.f_z
    }

    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.f_x;
        let dy = y - self.f_y;
        (dx * dx + dy * dy + self.f_z * self.f_z).sqrt()
    }
}

/// Magnitude of the (time-reversed) line current; its phase is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineCurrent {
    magnitude: f64,
}

impl LineCurrent {
    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn phase(&self) -> f64 {
        0.0
    }
}

/// Magnitude of the (time-reversed) point source; its phase is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointSourceMagnitude {
    magnitude: f64,
}

impl PointSourceMagnitude {
    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn phase(&self) -> f64 {
        0.0
    }
}

/// `k y (sin theta_in - sin theta_out)`, wrapped.
pub fn beta_planar(y: f64, theta_in: f64, theta_out: f64, medium: &Medium) -> f64 {
    wrap_phase(medium.wavenumber() * y * (theta_in.sin() - theta_out.sin()))
}

pub fn tau_planar() -> f64 {
    1.0
}

/// Reflection angle (from `e_z`) pointing the planar design at `target`.
pub fn planar_theta_for_target(target: &Vec3) -> Result<f64> {
    if !(target.z > 0.0) {
        return Err(Error::Geometry(format!(
            "planar target must lie above the plate, got z={}",
            target.z
        )));
    }
    Ok((target.y / target.z).atan())
}

fn cylindrical_hankel(y: f64, line: &FocalLine, medium: &Medium) -> Result<Complex64> {
    hankel2(BesselOrder::Zero, medium.wavenumber() * line.distance(y))
}

fn cylindrical_beta_from(h0: Complex64, y: f64, theta_in: f64, medium: &Medium) -> f64 {
    wrap_phase(-(-h0).arg() + medium.wavenumber() * theta_in.sin() * y)
}

fn cylindrical_tau_from(h0: Complex64, current: &LineCurrent, wave: &IncidentWave, medium: &Medium) -> f64 {
    let k = medium.wavenumber();
    let eta = medium.impedance();
    (current.magnitude * k * eta / 4.0) * h0.norm() / wave.e0()
}

/// Phase of the cylindrical design; independent of `x`.
pub fn beta_cylindrical(_x: f64, y: f64, line: &FocalLine, theta_in: f64, medium: &Medium) -> Result<f64> {
    let h0 = cylindrical_hankel(y, line, medium)?;
    Ok(cylindrical_beta_from(h0, y, theta_in, medium))
}

/// Incident power intercepted by the plate, `E0^2 a b cos(theta_in) / (2 eta)`.
pub fn incident_power(aperture: &RisAperture, wave: &IncidentWave, medium: &Medium) -> f64 {
    wave.e0().powi(2) * aperture.area() * wave.theta_in().cos() / (2.0 * medium.impedance())
}

/// Fraction of the line source's angular extent subtended by the plate.
pub fn line_angular_fraction(aperture: &RisAperture, line: &FocalLine) -> f64 {
    let half = 0.5 * aperture.length_y();
    (((line.f_y + half) / line.f_z).atan() - ((line.f_y - half) / line.f_z).atan()) / TAU
}

/// Power the line current sends back through the plate.
pub fn cylindrical_reflected_power(
    aperture: &RisAperture,
    line: &FocalLine,
    current: &LineCurrent,
    medium: &Medium,
) -> f64 {
    line_angular_fraction(aperture, line) * current.magnitude.powi(2) * medium.wavenumber()
        * medium.impedance()
        * aperture.length_x()
        / (16.0 * PI)
}

/// Line-current magnitude that makes reflected and incident power equal.
pub fn line_current_magnitude(
    aperture: &RisAperture,
    wave: &IncidentWave,
    line: &FocalLine,
    medium: &Medium,
) -> Result<LineCurrent> {
    let frac = line_angular_fraction(aperture, line);
    if !(frac > 0.0) {
        return Err(Error::Geometry(format!(
            "focal line subtends no angle at the plate (fraction {frac})"
        )));
    }
    let per_current2 = frac * medium.wavenumber() * medium.impedance() * aperture.length_x() / (16.0 * PI);
    let magnitude = (incident_power(aperture, wave, medium) / per_current2).sqrt();
    Ok(LineCurrent { magnitude })
}

pub fn tau_cylindrical(
    _x: f64,
    y: f64,
    line: &FocalLine,
    current: &LineCurrent,
    wave: &IncidentWave,
    medium: &Medium,
) -> Result<f64> {
    let h0 = cylindrical_hankel(y, line, medium)?;
    Ok(cylindrical_tau_from(h0, current, wave, medium))
}

/// Phase of the spherical design, `k R_s + k sin(theta_in) y`, wrapped.
///
/// The reflected field is the converging wave `U1 exp(+j k R_s) / R_s`,
/// matching the `+k R` behaviour of the cylindrical phase.
pub fn beta_spherical(x: f64, y: f64, point: &FocalPoint, theta_in: f64, medium: &Medium) -> f64 {
    let k = medium.wavenumber();
    wrap_phase(k * point.distance(x, y) + k * theta_in.sin() * y)
}

/// Solid angle the plate subtends at `point`, by quadrature on `grid`.
pub fn solid_angle(grid: &SurfaceGrid, point: &FocalPoint) -> Result<f64> {
    let fz = point.f_z;
    grid.integrate_real(|x, y| {
        let r = point.distance(x, y);
        fz / (r * r * r)
    })
}

/// Closed-form solid angle of the plate seen from height `z` above its
/// center: `4 atan(ab / (4 z sqrt(a^2/4 + b^2/4 + z^2)))`.
pub fn centered_solid_angle(aperture: &RisAperture, z: f64) -> Result<f64> {
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::Geometry(format!("height must be positive, got {z}")));
    }
    let (ha, hb) = (0.5 * aperture.length_y(), 0.5 * aperture.length_x());
    Ok(4.0 * (ha * hb / (z * (ha * ha + hb * hb + z * z).sqrt())).atan())
}

/// `Omega |U1|^2 / (2 eta)`.
pub fn spherical_reflected_power(omega: f64, source: &PointSourceMagnitude, medium: &Medium) -> f64 {
    omega * source.magnitude.powi(2) / (2.0 * medium.impedance())
}

/// Point-source magnitude from a known solid angle.
pub fn point_source_magnitude_for(
    aperture: &RisAperture,
    wave: &IncidentWave,
    omega: f64,
) -> Result<PointSourceMagnitude> {
    if !(omega > 0.0) {
        return Err(Error::Geometry(format!("solid angle must be positive, got {omega}")));
    }
    let magnitude = wave.e0() * (aperture.area() * wave.theta_in().cos() / omega).sqrt();
    Ok(PointSourceMagnitude { magnitude })
}

/// Point-source magnitude, with the solid angle computed on the default grid.
pub fn point_source_magnitude(
    aperture: &RisAperture,
    wave: &IncidentWave,
    point: &FocalPoint,
    medium: &Medium,
) -> Result<PointSourceMagnitude> {
    let grid = SurfaceGrid::default_for(aperture, medium)?;
    point_source_magnitude_for(aperture, wave, solid_angle(&grid, point)?)
}

pub fn tau_spherical(
    x: f64,
    y: f64,
    point: &FocalPoint,
    source: &PointSourceMagnitude,
    wave: &IncidentWave,
) -> f64 {
    source.magnitude / (point.distance(x, y) * wave.e0())
}

/// Which strategy a design uses, with its normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DesignKind {
    Planar {
        theta_out: f64,
    },
    Cylindrical {
        line: FocalLine,
        current: LineCurrent,
    },
    Spherical {
        point: FocalPoint,
        source: PointSourceMagnitude,
        solid_angle: f64,
    },
}

/// Strategy selector for designs focused on a target position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Planar,
    Cylindrical,
    Spherical,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Planar => "planar",
            Self::Cylindrical => "cylindrical",
            Self::Spherical => "spherical",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "planar" => Ok(Self::Planar),
            "cylindrical" => Ok(Self::Cylindrical),
            "spherical" => Ok(Self::Spherical),
            other => Err(Error::invalid("design", format!("unknown design kind `{other}`"))),
        }
    }
}

/// A complete reflection-coefficient field, evaluable anywhere on the plate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReflectionDesign {
    kind: DesignKind,
    #[serde(skip)]
    medium: Medium,
    #[serde(skip)]
    wave: IncidentWave,
}

impl ReflectionDesign {
    pub fn planar(theta_out: f64, wave: &IncidentWave, medium: &Medium) -> Result<Self> {
        if !(theta_out.is_finite() && theta_out.abs() < 0.5 * PI) {
            return Err(Error::invalid("theta_out", format!("must lie in (-pi/2, pi/2), got {theta_out}")));
        }
        Ok(Self {
            kind: DesignKind::Planar { theta_out },
            medium: *medium,
            wave: *wave,
        })
    }

    pub fn cylindrical(aperture: &RisAperture, wave: &IncidentWave, line: FocalLine, medium: &Medium) -> Result<Self> {
        let current = line_current_magnitude(aperture, wave, &line, medium)?;
        Ok(Self {
            kind: DesignKind::Cylindrical { line, current },
            medium: *medium,
            wave: *wave,
        })
    }

    /// Spherical design with the solid angle computed on `grid`.
    pub fn spherical_on(
        aperture: &RisAperture,
        wave: &IncidentWave,
        point: FocalPoint,
        grid: &SurfaceGrid,
        medium: &Medium,
    ) -> Result<Self> {
        let omega = solid_angle(grid, &point)?;
        let source = point_source_magnitude_for(aperture, wave, omega)?;
        Ok(Self {
            kind: DesignKind::Spherical {
                point,
                source,
                solid_angle: omega,
            },
            medium: *medium,
            wave: *wave,
        })
    }

    pub fn spherical(aperture: &RisAperture, wave: &IncidentWave, point: FocalPoint, medium: &Medium) -> Result<Self> {
        let grid = SurfaceGrid::default_for(aperture, medium)?;
        Self::spherical_on(aperture, wave, point, &grid, medium)
    }

    /// Design of the given strategy focused on (or, for planar, pointed at)
    /// `target`.
    pub fn focused(
        strategy: Strategy,
        target: &Vec3,
        aperture: &RisAperture,
        wave: &IncidentWave,
        medium: &Medium,
    ) -> Result<Self> {
        match strategy {
            Strategy::Planar => Self::planar(planar_theta_for_target(target)?, wave, medium),
            Strategy::Cylindrical => Self::cylindrical(aperture, wave, FocalLine::new(target.y, target.z)?, medium),
            Strategy::Spherical => Self::spherical(aperture, wave, FocalPoint::from_vec(target)?, medium),
        }
    }

    pub fn kind(&self) -> &DesignKind {
        &self.kind
    }

    pub fn strategy(&self) -> Strategy {
        match self.kind {
            DesignKind::Planar { .. } => Strategy::Planar,
            DesignKind::Cylindrical { .. } => Strategy::Cylindrical,
            DesignKind::Spherical { .. } => Strategy::Spherical,
        }
    }

    pub fn medium(&self) -> &Medium {
        &self.medium
    }

    pub fn wave(&self) -> &IncidentWave {
        &self.wave
    }

    /// True when `Gamma` depends on `y` only.
    pub fn is_x_invariant(&self) -> bool {
        !matches!(self.kind, DesignKind::Spherical { .. })
    }

    /// `(tau, beta)` at plate point `(x, y)`.
    pub fn evaluate(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let theta_in = self.wave.theta_in();
        match &self.kind {
            DesignKind::Planar { theta_out } => Ok((tau_planar(), beta_planar(y, theta_in, *theta_out, &self.medium))),
            DesignKind::Cylindrical { line, current } => {
                let h0 = cylindrical_hankel(y, line, &self.medium)?;
                Ok((
                    cylindrical_tau_from(h0, current, &self.wave, &self.medium),
                    cylindrical_beta_from(h0, y, theta_in, &self.medium),
                ))
            }
            DesignKind::Spherical { point, source, .. } => Ok((
                tau_spherical(x, y, point, source, &self.wave),
                beta_spherical(x, y, point, theta_in, &self.medium),
            )),
        }
    }

    /// `Gamma(x, y) = tau exp(j beta)`.
    pub fn gamma(&self, x: f64, y: f64) -> Result<Complex64> {
        let (tau, beta) = self.evaluate(x, y)?;
        Ok(Complex64::from_polar(tau, beta))
    }

    /// `Gamma` at every node of `grid`, in node order.
    pub fn sample(&self, grid: &SurfaceGrid) -> Result<Vec<Complex64>> {
        (0..grid.len())
            .map(|i| {
                let (x, y) = grid.node(i);
                self.gamma(x, y)
            })
            .collect()
    }

    /// `Gamma` along the rows of `grid` (x-invariant designs only).
    pub fn sample_rows(&self, ys: &[f64]) -> Result<Vec<Complex64>> {
        if !self.is_x_invariant() {
            return Err(Error::invalid("design", "row sampling requires an x-invariant design"));
        }
        ys.iter().map(|&y| self.gamma(0.0, y)).collect()
    }

    /// Largest amplitude over the grid nodes.
    pub fn max_tau(&self, grid: &SurfaceGrid) -> Result<f64> {
        let mut max = 0.0f64;
        for i in 0..grid.len() {
            let (x, y) = grid.node(i);
            max = max.max(self.evaluate(x, y)?.0);
        }
        Ok(max)
    }

    /// Reflected power implied by the design's normalization.
    pub fn reflected_power(&self, aperture: &RisAperture) -> f64 {
        match &self.kind {
            DesignKind::Planar { .. } => incident_power(aperture, &self.wave, &self.medium),
            DesignKind::Cylindrical { line, current } => {
                cylindrical_reflected_power(aperture, line, current, &self.medium)
            }
            DesignKind::Spherical {
                source, solid_angle, ..
            } => spherical_reflected_power(*solid_angle, source, &self.medium),
        }
    }

    /// One-line description used in export headers.
    pub fn describe(&self) -> String {
        match &self.kind {
            DesignKind::Planar { theta_out } => {
                format!("design=planar theta_out_deg={:.17e}", theta_out.to_degrees())
            }
            DesignKind::Cylindrical { line, current } => format!(
                "design=cylindrical f_y_m={:.17e} f_z_m={:.17e} line_current_a={:.17e}",
                line.f_y, line.f_z, current.magnitude
            ),
            DesignKind::Spherical {
                point,
                source,
                solid_angle,
            } => format!(
                "design=spherical f_x_m={:.17e} f_y_m={:.17e} f_z_m={:.17e} source_vm={:.17e} solid_angle_sr={:.17e}",
                point.f_x, point.f_y, point.f_z, source.magnitude, solid_angle
            ),
        }
    }
}
