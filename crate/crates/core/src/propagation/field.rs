//! Scattered field above the plate.
//!
//! The scalar route integrates the Kirchhoff kernel over the reflected
//! aperture field `Gamma E_in`. The dyadic route radiates the equivalent
//! surface current of the induction theorem through the free-space dyadic
//! Green's function; it is slower and serves as a cross-check.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::design::ReflectionDesign;
use crate::em::{CVec3, IncidentWave, Medium, UlaReceiver, Vec3};
use crate::error::{Error, Result};
use crate::quadrature::{tree_reduce, SurfaceGrid};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Electric field phasor at a point above the plate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSample {
    position: Vec3,
    e_field: CVec3,
}

impl FieldSample {
    pub fn new(position: Vec3, e_field: CVec3) -> Result<Self> {
        check_above(&position)?;
        Ok(Self { position, e_field })
    }

    pub fn position(&self) -> Vec3 {
        self.position
    }

    pub fn e_field(&self) -> &CVec3 {
        &self.e_field
    }

    /// `||E||^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.e_field.iter().map(|v| v.norm_sqr()).sum()
    }
}

fn check_above(p: &Vec3) -> Result<()> {
    if p.z > 0.0 && p.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::Geometry(format!(
            "observation point ({}, {}, {}) is not above the plate",
            p.x, p.y, p.z
        )))
    }
}

/// Reflected aperture field `Gamma(x, y) E_in,x(x, y, 0)` sampled on a grid.
///
/// Sampling once and reusing the samples for many observation points avoids
/// re-evaluating the design (and its Hankel functions) per point.
#[derive(Debug, Clone)]
pub struct SampledAperture {
    grid: SurfaceGrid,
    /// Per node, row-major like the grid.
    samples: Vec<Complex64>,
    k: f64,
    wavelength: f64,
    cos_in: f64,
}

impl SampledAperture {
    pub fn new(design: &ReflectionDesign, grid: &SurfaceGrid, wave: &IncidentWave, medium: &Medium) -> Result<Self> {
        let gammas = design.sample(grid)?;
        Self::from_gamma(gammas, grid, wave, medium)
    }

    /// Aperture for reflection coefficients given per grid node.
    pub fn from_gamma(gammas: Vec<Complex64>, grid: &SurfaceGrid, wave: &IncidentWave, medium: &Medium) -> Result<Self> {
        if gammas.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "expected {} node coefficients, got {}",
                grid.len(),
                gammas.len()
            )));
        }
        let samples = gammas
            .iter()
            .enumerate()
            .map(|(i, g)| g * wave.plate_field(grid.node(i).1, medium))
            .collect();
        Ok(Self {
            grid: grid.clone(),
            samples,
            k: medium.wavenumber(),
            wavelength: medium.wavelength(),
            cos_in: wave.theta_in().cos(),
        })
    }

    pub fn grid(&self) -> &SurfaceGrid {
        &self.grid
    }

    /// `E_x` at `point` by the Kirchhoff integral.
    pub fn field_x(&self, point: &Vec3) -> Result<Complex64> {
        check_above(point)?;
        let k = self.k;
        let cos_in = self.cos_in;
        let sum = self.grid.integrate_vec(1, |i, x, y, acc| {
            let dx = point.x - x;
            let dy = point.y - y;
            let r = (dx * dx + dy * dy + point.z * point.z).sqrt();
            let amp = 0.5 * (cos_in + point.z / r) / r;
            let (s, c) = (-k * r).sin_cos();
            acc[0] += self.samples[i] * Complex64::new(amp * c, amp * s);
        })?;
        // 1 / (j lambda)
        Ok(sum[0] * Complex64::new(0.0, -1.0 / self.wavelength))
    }

    pub fn field_at(&self, point: &Vec3) -> Result<FieldSample> {
        let ex = self.field_x(point)?;
        FieldSample::new(*point, CVec3::new(ex, ZERO, ZERO))
    }

    /// `||E||^2 / (2 eta d^2)` at `(0, d cos theta, d sin theta)`.
    pub fn normalized_arc_power(&self, d: f64, theta: f64, medium: &Medium) -> Result<f64> {
        let point = arc_point(d, theta)?;
        let e = self.field_x(&point)?;
        Ok(e.norm_sqr() / (2.0 * medium.impedance() * d * d))
    }

    /// Arc power over `thetas`, evaluated in parallel.
    pub fn arc_profile(&self, d: f64, thetas: &[f64], medium: &Medium) -> Result<Vec<f64>> {
        thetas
            .par_iter()
            .map(|&t| self.normalized_arc_power(d, t, medium))
            .collect()
    }
}

/// Observation point on the arc of radius `d` in the `yz` plane; `theta` is
/// measured from `e_y`.
pub fn arc_point(d: f64, theta: f64) -> Result<Vec3> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::invalid("arc.d", format!("must be positive, got {d}")));
    }
    let (s, c) = theta.sin_cos();
    let p = Vec3::new(0.0, d * c, d * s);
    check_above(&p)?;
    Ok(p)
}

/// Scattered field at `point` by the scalar Kirchhoff route.
pub fn field_at(
    design: &ReflectionDesign,
    grid: &SurfaceGrid,
    point: &Vec3,
    wave: &IncidentWave,
    medium: &Medium,
) -> Result<FieldSample> {
    check_above(point)?;
    SampledAperture::new(design, grid, wave, medium)?.field_at(point)
}

/// `||E_obs||^2 / (2 eta d^2)` at `(0, d cos theta, d sin theta)`.
pub fn normalized_arc_power(
    design: &ReflectionDesign,
    grid: &SurfaceGrid,
    d: f64,
    theta: f64,
    wave: &IncidentWave,
    medium: &Medium,
) -> Result<f64> {
    arc_point(d, theta)?;
    SampledAperture::new(design, grid, wave, medium)?.normalized_arc_power(d, theta, medium)
}

/// Equivalent surface current `J_x = -2 (E0/eta) Gamma cos(theta_in) exp(-j k sin(theta_in) y)`.
pub fn equivalent_current(design: &ReflectionDesign, x: f64, y: f64) -> Result<CVec3> {
    let wave = design.wave();
    let medium = design.medium();
    let jx = design.gamma(x, y)? * wave.plate_field(y, medium) * (-2.0 * wave.theta_in().cos() / medium.impedance());
    Ok(CVec3::new(jx, ZERO, ZERO))
}

/// Scattered field at `point` from the induction-theorem current.
///
/// `E = (eta / (4 pi j k)) sum J_x curl curl (e_x exp(-j k R) / R) dA`, with
/// the derivatives of the kernel taken analytically.
pub fn dyadic_field_at(
    design: &ReflectionDesign,
    grid: &SurfaceGrid,
    point: &Vec3,
    wave: &IncidentWave,
    medium: &Medium,
) -> Result<FieldSample> {
    check_above(point)?;
    if point.z < 0.1 * medium.wavelength() {
        return Err(Error::Geometry(format!(
            "observation point z={} lies within a tenth of a wavelength of the plate",
            point.z
        )));
    }
    let k = medium.wavenumber();
    let amp_j = -2.0 * wave.theta_in().cos() / medium.impedance();
    let currents: Vec<Complex64> = design
        .sample(grid)?
        .into_iter()
        .enumerate()
        .map(|(i, g)| g * wave.plate_field(grid.node(i).1, medium) * amp_j)
        .collect();
    let sum = grid.integrate_vec(3, |i, x, y, acc| {
        let r = Vec3::new(point.x - x, point.y - y, point.z);
        let d = r.norm();
        let g = Complex64::from_polar(1.0 / d, -k * d);
        let jk = Complex64::new(0.0, k);
        // dG/dR and d2G/dR2.
        let g1 = -(jk + 1.0 / d) * g;
        let g2 = g / (d * d) + (jk + 1.0 / d) * (jk + 1.0 / d) * g;
        let cross = (g2 - g1 / d) * (r.x / (d * d));
        let diag = g1 / d + k * k * g;
        let j = currents[i];
        acc[0] += j * (cross * r.x + diag);
        acc[1] += j * (cross * r.y);
        acc[2] += j * (cross * r.z);
    })?;
    let front = Complex64::new(0.0, -medium.impedance() / (4.0 * PI * k));
    FieldSample::new(*point, CVec3::new(sum[0] * front, sum[1] * front, sum[2] * front))
}

/// Scattered fields at every antenna of `receiver`.
pub fn fields_at_antennas(aperture: &SampledAperture, receiver: &UlaReceiver) -> Result<Vec<FieldSample>> {
    receiver
        .positions()
        .par_iter()
        .map(|p| aperture.field_at(p))
        .collect()
}

/// Friis power collected by the array: `sum_m ||E_m||^2 / (2 eta) * lambda^2 G_r / (4 pi)`.
pub fn received_power_em(fields: &[FieldSample], rx_gain: f64, medium: &Medium) -> Result<f64> {
    if !(rx_gain.is_finite() && rx_gain > 0.0) {
        return Err(Error::invalid("rx_gain", format!("must be positive, got {rx_gain}")));
    }
    let flux: Vec<Complex64> = fields
        .iter()
        .map(|f| Complex64::new(f.norm_sqr(), 0.0))
        .collect();
    let total = tree_reduce(
        0..flux.len(),
        &|r: std::ops::Range<usize>| flux[r].iter().map(|c| c.re).sum::<f64>(),
        &|a, b| a + b,
    );
    let lambda = medium.wavelength();
    Ok(total / (2.0 * medium.impedance()) * lambda * lambda * rx_gain / (4.0 * PI))
}
