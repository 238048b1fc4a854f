//! Plate-to-array channel: Kirchhoff kernel, steering and path-gain vectors,
//! and the integrated channel vector `h`.
//!
//! All phasors follow the `exp(j omega t)` convention, so every propagation
//! leg contributes `exp(-j k r)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::design::ReflectionDesign;
use crate::em::{IncidentWave, Medium, UlaReceiver, Vec3};
use crate::error::{Error, Result};
use crate::quadrature::{tree_reduce, SurfaceGrid};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Distance from plate point `(x, y, 0)` to `antenna`.
pub fn path_distance(x: f64, y: f64, antenna: &Vec3) -> Result<f64> {
    check_above(antenna)?;
    Ok(distance(x, y, antenna))
}

/// Angle between `e_z` and the vector from `(x, y, 0)` to `antenna`.
pub fn obliquity_angle(x: f64, y: f64, antenna: &Vec3) -> Result<f64> {
    check_above(antenna)?;
    Ok((antenna.z / distance(x, y, antenna)).clamp(-1.0, 1.0).acos())
}

fn check_above(p: &Vec3) -> Result<()> {
    if p.z > 0.0 && p.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::Geometry(format!(
            "point ({}, {}, {}) is not above the plate",
            p.x, p.y, p.z
        )))
    }
}

#[inline]
fn distance(x: f64, y: f64, p: &Vec3) -> f64 {
    let dx = p.x - x;
    let dy = p.y - y;
    (dx * dx + dy * dy + p.z * p.z).sqrt()
}

/// Field that the source, via plate element `(x, y)` with `Gamma = 1`,
/// produces at `antenna`, per unit plate area.
pub fn kirchhoff_contribution(x: f64, y: f64, antenna: &Vec3, wave: &IncidentWave, medium: &Medium) -> Result<Complex64> {
    let d = path_distance(x, y, antenna)?;
    let k = medium.wavenumber();
    let l = wave.source_distance();
    let (s_in, c_in) = wave.theta_in().sin_cos();
    let front = Complex64::new(0.0, -wave.source_magnitude() / medium.wavelength());
    let inc = Complex64::from_polar(1.0 / l, -k * (l + y * s_in));
    let out = Complex64::from_polar(1.0 / d, -k * d);
    Ok(front * inc * out * (0.5 * (c_in + antenna.z / d)))
}

/// `b(x, y)`: entry `m` is `exp(-j k (l + y sin theta_in + d_m)) / sqrt(M)`.
pub fn steering_vector(x: f64, y: f64, receiver: &UlaReceiver, wave: &IncidentWave, medium: &Medium) -> Result<Vec<Complex64>> {
    let k = medium.wavenumber();
    let l = wave.source_distance();
    let base = l + y * wave.theta_in().sin();
    let norm = 1.0 / (receiver.num_antennas() as f64).sqrt();
    receiver
        .positions()
        .iter()
        .map(|p| Ok(Complex64::from_polar(norm, -k * (base + path_distance(x, y, p)?))))
        .collect()
}

/// `q(x, y)`: entry `m` is `sqrt(M) (cos theta_in + cos theta_out,m) / (2 j l lambda d_m)`.
pub fn path_gain_vector(x: f64, y: f64, receiver: &UlaReceiver, wave: &IncidentWave, medium: &Medium) -> Result<Vec<Complex64>> {
    let c_in = wave.theta_in().cos();
    let front = Complex64::new(0.0, -(receiver.num_antennas() as f64).sqrt() / (2.0 * wave.source_distance() * medium.wavelength()));
    receiver
        .positions()
        .iter()
        .map(|p| {
            let d = path_distance(x, y, p)?;
            Ok(front * ((c_in + p.z / d) / d))
        })
        .collect()
}

/// `g(x, y) = lambda q(x, y) sqrt(G_t G_r) / (4 pi)`.
///
/// With this scaling `||h||^2 P_t` equals the Friis power of the scattered
/// field exactly. The variant with an additional `1/sqrt(eta M)` is reached
/// through [`impedance_gain_scale`].
pub fn channel_gain_vector(x: f64, y: f64, receiver: &UlaReceiver, wave: &IncidentWave, medium: &Medium) -> Result<Vec<Complex64>> {
    let scale = gain_prefactor(receiver, wave, medium);
    let mut q = path_gain_vector(x, y, receiver, wave, medium)?;
    for v in &mut q {
        *v *= scale;
    }
    Ok(q)
}

fn gain_prefactor(receiver: &UlaReceiver, wave: &IncidentWave, medium: &Medium) -> f64 {
    medium.wavelength() / (4.0 * PI) * (wave.tx_gain() * receiver.rx_gain()).sqrt()
}

/// Factor `1/sqrt(eta M)` separating [`channel_gain_vector`] from the
/// variant that carries the medium impedance inside the gain.
pub fn impedance_gain_scale(receiver: &UlaReceiver, medium: &Medium) -> f64 {
    1.0 / (medium.impedance() * receiver.num_antennas() as f64).sqrt()
}

/// Complex channel gains `h_m`, one per antenna.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelVector {
    entries: Vec<Complex64>,
}

impl ChannelVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if !entries.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::domain("channel vector entries must be finite"));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|v| v * factor).collect(),
        }
    }
}

impl std::ops::Index<usize> for ChannelVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.entries[i]
    }
}

/// Everything about the array needed to evaluate `g o b` at a plate node.
struct ArrayKernel {
    positions: Vec<Vec3>,
    k: f64,
    sin_in: f64,
    cos_in: f64,
    /// `lambda sqrt(Gt Gr) / (4 pi) * 1 / (2 j l lambda) * exp(-j k l)`.
    front: Complex64,
}

impl ArrayKernel {
    fn new(receiver: &UlaReceiver, wave: &IncidentWave, medium: &Medium) -> Result<Self> {
        let positions = receiver.positions();
        for p in &positions {
            check_above(p)?;
        }
        let k = medium.wavenumber();
        let l = wave.source_distance();
        let (sin_in, cos_in) = wave.theta_in().sin_cos();
        let front = Complex64::new(0.0, -gain_prefactor(receiver, wave, medium) / (2.0 * l * medium.wavelength()))
            * Complex64::from_polar(1.0, -k * l);
        Ok(Self {
            positions,
            k,
            sin_in,
            cos_in,
            front,
        })
    }

    /// Adds `weight * (g o b)(x, y)` without the constant `front` factor.
    #[inline]
    fn accumulate(&self, x: f64, y: f64, weight: Complex64, acc: &mut [Complex64]) {
        let phase_in = self.k * y * self.sin_in;
        for (a, p) in acc.iter_mut().zip(&self.positions) {
            let d = distance(x, y, p);
            let amp = (self.cos_in + p.z / d) / d;
            let (s, c) = (-(phase_in + self.k * d)).sin_cos();
            *a += weight * Complex64::new(amp * c, amp * s);
        }
    }

    /// Adds the gradient of `weight * (g o b)(x, y)` with respect to a
    /// translation of the whole array, laid out as `[d/dx; d/dy; d/dz]`,
    /// each block `M` long.
    #[inline]
    fn accumulate_gradient(&self, x: f64, y: f64, weight: Complex64, acc: &mut [Complex64]) {
        let m = self.positions.len();
        let phase_in = self.k * y * self.sin_in;
        for (i, p) in self.positions.iter().enumerate() {
            let r = [p.x - x, p.y - y, p.z];
            let d = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            let obl = self.cos_in + p.z / d;
            let amp = obl / d;
            let (s, c) = (-(phase_in + self.k * d)).sin_cos();
            let e = weight * Complex64::new(c, s);
            let d2 = d * d;
            for (axis, &ri) in r.iter().enumerate() {
                // d/dXi of (cos_in + z/d)/d, then of exp(-j k d).
                let dz = if axis == 2 { 1.0 / d2 } else { 0.0 };
                let d_amp = dz - p.z * ri / (d2 * d2) - obl * ri / (d2 * d);
                let d_phase = -self.k * amp * ri / d;
                acc[axis * m + i] += e * Complex64::new(d_amp, d_phase);
            }
        }
    }
}

/// Plate-row sums of the array kernel for a fixed receiver.
///
/// For designs that do not depend on `x`, `h = sum_rows Gamma(y) K(y)`, which
/// makes re-evaluating many designs against one receiver cheap.
pub struct RowKernel {
    ys: Vec<f64>,
    num_antennas: usize,
    /// Row-major `ny x M`, already multiplied by the cell area and the
    /// constant kernel prefactor.
    rows: Vec<Complex64>,
}

impl RowKernel {
    pub fn new(grid: &SurfaceGrid, receiver: &UlaReceiver, wave: &IncidentWave, medium: &Medium) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Empty("surface grid"));
        }
        let kernel = ArrayKernel::new(receiver, wave, medium)?;
        let m = receiver.num_antennas();
        let rows = row_sums(grid, &kernel, m, |k, x, y, acc| k.accumulate(x, y, Complex64::new(1.0, 0.0), acc));
        Ok(Self {
            ys: grid.ys().to_vec(),
            num_antennas: m,
            rows: rows.concat(),
        })
    }

    /// Row kernels of the gradient of `h` with respect to the array
    /// position, one per Cartesian axis.
    pub fn gradients(grid: &SurfaceGrid, receiver: &UlaReceiver, wave: &IncidentWave, medium: &Medium) -> Result<[Self; 3]> {
        if grid.is_empty() {
            return Err(Error::Empty("surface grid"));
        }
        let kernel = ArrayKernel::new(receiver, wave, medium)?;
        let m = receiver.num_antennas();
        let rows = row_sums(grid, &kernel, 3 * m, |k, x, y, acc| {
            k.accumulate_gradient(x, y, Complex64::new(1.0, 0.0), acc)
        });
        let split = |axis: usize| Self {
            ys: grid.ys().to_vec(),
            num_antennas: m,
            rows: rows.iter().flat_map(|r| r[axis * m..(axis + 1) * m].iter().copied()).collect(),
        };
        Ok([split(0), split(1), split(2)])
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    /// Row `iy` of the kernel, one entry per antenna.
    pub fn row(&self, iy: usize) -> &[Complex64] {
        &self.rows[iy * self.num_antennas..(iy + 1) * self.num_antennas]
    }

    /// `h` for reflection coefficients sampled at [`RowKernel::ys`].
    pub fn apply(&self, gamma_rows: &[Complex64]) -> Result<ChannelVector> {
        if gamma_rows.len() != self.ys.len() {
            return Err(Error::Dimension(format!(
                "expected {} row coefficients, got {}",
                self.ys.len(),
                gamma_rows.len()
            )));
        }
        let m = self.num_antennas;
        let h = tree_reduce(
            0..self.ys.len(),
            &|r: std::ops::Range<usize>| {
                let mut acc = vec![ZERO; m];
                for iy in r {
                    let g = gamma_rows[iy];
                    for (a, k) in acc.iter_mut().zip(self.row(iy)) {
                        *a += g * k;
                    }
                }
                acc
            },
            &add_vec,
        );
        ChannelVector::new(h)
    }

    /// `h` for an x-invariant design.
    pub fn apply_design(&self, design: &ReflectionDesign) -> Result<ChannelVector> {
        self.apply(&design.sample_rows(&self.ys)?)
    }
}

/// Per-row tree sums over `x` of a vector-valued kernel, scaled by the
/// cell area and the kernel prefactor.
fn row_sums<F>(grid: &SurfaceGrid, kernel: &ArrayKernel, len: usize, f: F) -> Vec<Vec<Complex64>>
where
    F: Fn(&ArrayKernel, f64, f64, &mut [Complex64]) + Sync,
{
    let xs = grid.xs();
    let scale = kernel.front * grid.cell_area();
    grid.ys()
        .par_iter()
        .map(|&y| {
            let mut row = tree_reduce(
                0..xs.len(),
                &|r: std::ops::Range<usize>| {
                    let mut acc = vec![ZERO; len];
                    for &x in &xs[r] {
                        f(kernel, x, y, &mut acc);
                    }
                    acc
                },
                &add_vec,
            );
            for v in &mut row {
                *v *= scale;
            }
            row
        })
        .collect()
}

fn add_vec(mut a: Vec<Complex64>, b: Vec<Complex64>) -> Vec<Complex64> {
    for (u, v) in a.iter_mut().zip(&b) {
        *u += v;
    }
    a
}

/// `h = sum_nodes Gamma (g o b) dA` for an arbitrary reflection profile.
///
/// Nodes are reduced in the fixed tree order of [`SurfaceGrid::integrate_vec`].
pub fn channel_vector_for_profile<F>(
    gamma: F,
    grid: &SurfaceGrid,
    receiver: &UlaReceiver,
    wave: &IncidentWave,
    medium: &Medium,
) -> Result<ChannelVector>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    let kernel = ArrayKernel::new(receiver, wave, medium)?;
    let mut h = grid.integrate_vec(receiver.num_antennas(), |_, x, y, acc| {
        kernel.accumulate(x, y, gamma(x, y), acc);
    })?;
    for v in &mut h {
        *v *= kernel.front;
    }
    ChannelVector::new(h)
}

/// Channel vector of `design` towards `receiver`.
///
/// Designs that do not depend on `x` are integrated row by row, everything
/// else node by node; both orders are fixed.
pub fn channel_vector(
    design: &ReflectionDesign,
    grid: &SurfaceGrid,
    receiver: &UlaReceiver,
    wave: &IncidentWave,
    medium: &Medium,
) -> Result<ChannelVector> {
    if design.is_x_invariant() {
        RowKernel::new(grid, receiver, wave, medium)?.apply_design(design)
    } else {
        let gammas = design.sample(grid)?;
        let kernel = ArrayKernel::new(receiver, wave, medium)?;
        let mut h = grid.integrate_vec(receiver.num_antennas(), |i, x, y, acc| {
            kernel.accumulate(x, y, gammas[i], acc);
        })?;
        for v in &mut h {
            *v *= kernel.front;
        }
        ChannelVector::new(h)
    }
}

/// Gradient of `h` with respect to a translation of the receiver, as
/// `[dh/dx, dh/dy, dh/dz]`.
pub fn channel_gradient(
    design: &ReflectionDesign,
    grid: &SurfaceGrid,
    receiver: &UlaReceiver,
    wave: &IncidentWave,
    medium: &Medium,
) -> Result<[ChannelVector; 3]> {
    if design.is_x_invariant() {
        let [gx, gy, gz] = RowKernel::gradients(grid, receiver, wave, medium)?;
        let rows = design.sample_rows(gx.ys())?;
        return Ok([gx.apply(&rows)?, gy.apply(&rows)?, gz.apply(&rows)?]);
    }
    let gammas = design.sample(grid)?;
    let kernel = ArrayKernel::new(receiver, wave, medium)?;
    let m = receiver.num_antennas();
    let mut g = grid.integrate_vec(3 * m, |i, x, y, acc| {
        kernel.accumulate_gradient(x, y, gammas[i], acc);
    })?;
    for v in &mut g {
        *v *= kernel.front;
    }
    let part = |axis: usize| ChannelVector::new(g[axis * m..(axis + 1) * m].to_vec());
    Ok([part(0)?, part(1)?, part(2)?])
}

/// `||h||^2 P_s`.
pub fn received_power(h: &ChannelVector, signal_power: f64) -> Result<f64> {
    if !(signal_power.is_finite() && signal_power >= 0.0) {
        return Err(Error::invalid("signal_power", format!("must be non-negative, got {signal_power}")));
    }
    Ok(h.norm_sqr() * signal_power)
}

/// `log2(1 + P / N)`.
pub fn capacity(received_power: f64, noise_power: f64) -> Result<f64> {
    if !(received_power.is_finite() && received_power >= 0.0) {
        return Err(Error::invalid("received_power", format!("must be non-negative, got {received_power}")));
    }
    if !(noise_power.is_finite() && noise_power > 0.0) {
        return Err(Error::invalid("noise_power", format!("must be positive, got {noise_power}")));
    }
    Ok((received_power / noise_power).ln_1p() / std::f64::consts::LN_2)
}
