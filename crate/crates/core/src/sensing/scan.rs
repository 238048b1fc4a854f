//! Focal scanning: candidate grids, the per-slot designs and simulated
//! measurements.
//!
//! Slot `t` of a scan programs the plate with a design focused at candidate
//! `p(t)`; antenna `m` records `y[m, t] = h_m(p(t)) + noise`, with unit pilot.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::design::{ReflectionDesign, Strategy};
use crate::em::{IncidentWave, Medium, RisAperture, UlaReceiver, Vec3};
use crate::error::{Error, Result};
use crate::propagation::{channel_vector, RowKernel};
use crate::quadrature::SurfaceGrid;

/// Layout of a scan's candidate positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScanLayout {
    /// Candidates `(0, d cos psi, d sin psi)`; `t = i_d * n_psi + i_psi`.
    Arc { distances: Vec<f64>, angles: Vec<f64> },
    /// Candidates `(x, y, z)`; `t = (i_x * n_y + i_y) * n_z + i_z`.
    Cartesian { xs: Vec<f64>, ys: Vec<f64>, zs: Vec<f64> },
}

/// Ordered list of candidate receiver positions `p(t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanGrid {
    layout: ScanLayout,
    #[serde(skip)]
    candidates: Vec<Vec3>,
}

impl ScanGrid {
    /// Polar grid in the `yz` plane. `angles` are measured from `e_y`.
    pub fn arc(distances: Vec<f64>, angles: Vec<f64>) -> Result<Self> {
        if distances.is_empty() || angles.is_empty() {
            return Err(Error::Empty("scan grid"));
        }
        if let Some(d) = distances.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::invalid("scan.distances", format!("must be positive, got {d}")));
        }
        if let Some(a) = angles.iter().find(|a| !(**a > 0.0 && **a < std::f64::consts::PI)) {
            return Err(Error::invalid("scan.angles", format!("must lie in (0, pi), got {a}")));
        }
        let mut candidates = Vec::with_capacity(distances.len() * angles.len());
        for &d in &distances {
            for &a in &angles {
                let (s, c) = a.sin_cos();
                candidates.push(Vec3::new(0.0, d * c, d * s));
            }
        }
        Ok(Self {
            layout: ScanLayout::Arc { distances, angles },
            candidates,
        })
    }

    /// Regular arc grid: `d = d_lo + i dd` up to `d_hi`, `psi = psi_lo + j dpsi`
    /// up to `psi_hi` (both inclusive up to rounding).
    pub fn arc_uniform(d_range: (f64, f64), d_step: f64, psi_range: (f64, f64), psi_step: f64) -> Result<Self> {
        Self::arc(axis(d_range, d_step, "scan.d")?, axis(psi_range, psi_step, "scan.psi")?)
    }

    pub fn cartesian(xs: Vec<f64>, ys: Vec<f64>, zs: Vec<f64>) -> Result<Self> {
        if xs.is_empty() || ys.is_empty() || zs.is_empty() {
            return Err(Error::Empty("scan grid"));
        }
        if let Some(z) = zs.iter().find(|z| !(z.is_finite() && **z > 0.0)) {
            return Err(Error::Geometry(format!("scan candidates must lie above the plate, got z={z}")));
        }
        let mut candidates = Vec::with_capacity(xs.len() * ys.len() * zs.len());
        for &x in &xs {
            for &y in &ys {
                for &z in &zs {
                    candidates.push(Vec3::new(x, y, z));
                }
            }
        }
        Ok(Self {
            layout: ScanLayout::Cartesian { xs, ys, zs },
            candidates,
        })
    }

    /// Square `n x n` grid in the `yz` plane (at `x = 0`) centered on
    /// `center` with spacing `step`.
    pub fn yz_square(center: &Vec3, n: usize, step: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("scan grid"));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::invalid("scan.step", format!("must be positive, got {step}")));
        }
        let half = (n as f64 - 1.0) / 2.0;
        let line = |c: f64| (0..n).map(|i| c + (i as f64 - half) * step).collect::<Vec<_>>();
        Self::cartesian(vec![0.0], line(center.y), line(center.z))
    }

    pub fn layout(&self) -> &ScanLayout {
        &self.layout
    }

    pub fn candidates(&self) -> &[Vec3] {
        &self.candidates
    }

    pub fn candidate(&self, t: usize) -> Result<Vec3> {
        self.candidates.get(t).copied().ok_or(Error::IndexOutOfRange {
            index: t,
            len: self.candidates.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Index of the candidate closest to `p` (smallest index on ties).
    pub fn nearest(&self, p: &Vec3) -> usize {
        let mut best = (0, f64::INFINITY);
        for (t, c) in self.candidates.iter().enumerate() {
            let d = (c - p).norm_squared();
            if d < best.1 {
                best = (t, d);
            }
        }
        best.0
    }
}

fn axis(range: (f64, f64), step: f64, name: &str) -> Result<Vec<f64>> {
    let (lo, hi) = range;
    if !(step.is_finite() && step > 0.0) || !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::invalid(name, format!("invalid range [{lo}, {hi}] with step {step}")));
    }
    let n = ((hi - lo) / step * (1.0 + 1e-12)).floor() as usize + 1;
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}

/// Everything a scan needs: the candidate grid, one design per slot and the
/// propagation environment.
#[derive(Debug, Clone)]
pub struct ScanSetup {
    grid: ScanGrid,
    strategy: Strategy,
    designs: Vec<ReflectionDesign>,
    /// Per slot, `Gamma` on the surface-grid rows (x-invariant designs).
    rows: Option<Vec<Vec<Complex64>>>,
    receiver: UlaReceiver,
    wave: IncidentWave,
    medium: Medium,
    aperture: RisAperture,
    surface: SurfaceGrid,
}

impl ScanSetup {
    /// `receiver` fixes the array template (size, attitude, gain); its
    /// center is replaced by the hypothesized position wherever needed.
    pub fn new(
        grid: ScanGrid,
        strategy: Strategy,
        receiver: UlaReceiver,
        wave: IncidentWave,
        medium: Medium,
        aperture: RisAperture,
        surface: SurfaceGrid,
    ) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Empty("scan grid"));
        }
        let designs = grid
            .candidates()
            .par_iter()
            .map(|p| ReflectionDesign::focused(strategy, p, &aperture, &wave, &medium))
            .collect::<Result<Vec<_>>>()?;
        let rows = if designs.iter().all(|d| d.is_x_invariant()) {
            Some(
                designs
                    .par_iter()
                    .map(|d| d.sample_rows(surface.ys()))
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        Ok(Self {
            grid,
            strategy,
            designs,
            rows,
            receiver,
            wave,
            medium,
            aperture,
            surface,
        })
    }

    pub fn grid(&self) -> &ScanGrid {
        &self.grid
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn designs(&self) -> &[ReflectionDesign] {
        &self.designs
    }

    pub fn receiver(&self) -> &UlaReceiver {
        &self.receiver
    }

    pub fn wave(&self) -> &IncidentWave {
        &self.wave
    }

    pub fn medium(&self) -> &Medium {
        &self.medium
    }

    pub fn aperture(&self) -> &RisAperture {
        &self.aperture
    }

    pub fn surface(&self) -> &SurfaceGrid {
        &self.surface
    }

    pub fn num_antennas(&self) -> usize {
        self.receiver.num_antennas()
    }

    pub fn num_slots(&self) -> usize {
        self.grid.len()
    }

    /// The template array moved to `center`.
    pub fn receiver_at(&self, center: &Vec3) -> UlaReceiver {
        self.receiver.moved_to(*center)
    }

    /// Noise-free signals for an array centered at `center`, slot-major
    /// (`index = t * M + m`).
    pub fn noise_free(&self, center: &Vec3) -> Result<Vec<Complex64>> {
        let rx = self.receiver_at(center);
        let per_slot: Vec<Vec<Complex64>> = match &self.rows {
            Some(rows) => {
                let kernel = RowKernel::new(&self.surface, &rx, &self.wave, &self.medium)?;
                rows.par_iter()
                    .map(|r| kernel.apply(r).map(|h| h.entries().to_vec()))
                    .collect::<Result<_>>()?
            }
            None => self
                .designs
                .iter()
                .map(|d| channel_vector(d, &self.surface, &rx, &self.wave, &self.medium).map(|h| h.entries().to_vec()))
                .collect::<Result<_>>()?,
        };
        Ok(per_slot.concat())
    }

    /// Noise-free signals for every candidate taken as the array center.
    pub fn candidate_table(&self) -> Result<CandidateTable> {
        let signals = self
            .grid
            .candidates()
            .iter()
            .map(|c| self.noise_free(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(CandidateTable {
            num_candidates: self.grid.len(),
            num_slots: self.num_slots(),
            num_antennas: self.num_antennas(),
            signals: signals.concat(),
        })
    }
}

/// Model signals `s[c, t, m]` for every candidate position `c`.
#[derive(Debug, Clone)]
pub struct CandidateTable {
    num_candidates: usize,
    num_slots: usize,
    num_antennas: usize,
    signals: Vec<Complex64>,
}

impl CandidateTable {
    pub fn num_candidates(&self) -> usize {
        self.num_candidates
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    /// Signals of candidate `c`, slot-major.
    pub fn signals(&self, c: usize) -> &[Complex64] {
        let n = self.num_slots * self.num_antennas;
        &self.signals[c * n..(c + 1) * n]
    }
}

/// Recorded scan `y[m, t]`, stored slot-major (`index = t * M + m`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanMeasurement {
    num_antennas: usize,
    num_slots: usize,
    samples: Vec<Complex64>,
    noise_sigma: f64,
    strategy: Strategy,
}

impl ScanMeasurement {
    pub fn new(num_antennas: usize, num_slots: usize, samples: Vec<Complex64>, noise_sigma: f64, strategy: Strategy) -> Result<Self> {
        if samples.len() != num_antennas * num_slots {
            return Err(Error::Dimension(format!(
                "expected {num_antennas} x {num_slots} samples, got {}",
                samples.len()
            )));
        }
        check_sigma(noise_sigma)?;
        Ok(Self {
            num_antennas,
            num_slots,
            samples,
            noise_sigma,
            strategy,
        })
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// `y[m, t]` with zero-based `m` and `t`.
    pub fn sample(&self, m: usize, t: usize) -> Complex64 {
        self.samples[t * self.num_antennas + m]
    }

    /// Samples of slot `t`.
    pub fn slot(&self, t: usize) -> &[Complex64] {
        &self.samples[t * self.num_antennas..(t + 1) * self.num_antennas]
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    /// Copy with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("noise.sigma", format!("must be non-negative, got {sigma}")))
    }
}

/// Word offset reserved for auxiliary draws (e.g. truth positions) in each
/// trial's stream; noise rows sit at `t << 40`.
pub(crate) const AUX_WORD_POS: u128 = 1 << 67;

/// Generator for trial `trial`, positioned at `word_pos`.
pub(crate) fn stream(seed: u64, trial: u64, word_pos: u128) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng.set_word_pos(word_pos);
    rng
}

/// Circularly symmetric complex Gaussian noise of variance `sigma^2` for
/// slot `t` of trial `trial`.
///
/// Every `(trial, t)` row has its own position in the key stream, so draws
/// do not depend on evaluation order.
pub fn noise_row(seed: u64, trial: u64, t: usize, len: usize, sigma: f64) -> Vec<Complex64> {
    let mut rng = stream(seed, trial, (t as u128) << 40);
    let s = sigma * std::f64::consts::FRAC_1_SQRT_2;
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(s * re, s * im)
        })
        .collect()
}

/// Adds noise to slot-major noise-free signals.
pub fn add_noise(
    clean: &[Complex64],
    num_antennas: usize,
    sigma: f64,
    seed: u64,
    trial: u64,
    strategy: Strategy,
) -> Result<ScanMeasurement> {
    check_sigma(sigma)?;
    if num_antennas == 0 || !clean.len().is_multiple_of(num_antennas) {
        return Err(Error::Dimension(format!(
            "{} samples do not split into rows of {num_antennas}",
            clean.len()
        )));
    }
    let num_slots = clean.len() / num_antennas;
    let samples = if sigma == 0.0 {
        clean.to_vec()
    } else {
        (0..num_slots)
            .into_par_iter()
            .flat_map_iter(|t| {
                let noise = noise_row(seed, trial, t, num_antennas, sigma);
                let row = &clean[t * num_antennas..(t + 1) * num_antennas];
                row.iter().zip(noise).map(|(s, n)| s + n).collect::<Vec<_>>()
            })
            .collect()
    };
    ScanMeasurement::new(num_antennas, num_slots, samples, sigma, strategy)
}

/// Simulates a scan with the true array `truth`.
pub fn simulate_scan(truth: &UlaReceiver, setup: &ScanSetup, sigma: f64, seed: u64) -> Result<ScanMeasurement> {
    check_sigma(sigma)?;
    let clean = setup.receiver_at(&truth.center());
    if clean != *truth {
        return Err(Error::invalid(
            "receiver",
            "the true array must share size, attitude and gain with the scan template",
        ));
    }
    let s = setup.noise_free(&truth.center())?;
    add_noise(&s, setup.num_antennas(), sigma, seed, 0, setup.strategy())
}
