//! Location estimators: focal scanning (FS) and maximum likelihood (ML).
//!
//! The ML model writes the phase of `y[m, t]` as `psi[m, t](Xi) - k l`,
//! where `psi` is the phase of the noise-free model signal without the
//! source-path factor `exp(-j k l)` and `l` is treated as unknown. After the
//! amplitudes are eliminated the objective is
//!
//! `f(Xi, l) = -(1/sigma^2) sum |y|^2 sin^2(arg y - psi + k l)`
//!
//! and, with `sin^2 u = (1 - cos 2u) / 2`,
//!
//! `f = -(1/sigma^2) (S/2 - Re(exp(2 j k l) C(Xi)) / 2)`,
//! `S = sum |y|^2`, `C = sum y^2 exp(-2 j psi)`,
//!
//! so each candidate costs one pass over the data regardless of how many
//! `l` values are tested.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::scan::{CandidateTable, ScanGrid, ScanMeasurement};
use crate::em::{IncidentWave, Medium, Vec3};
use crate::error::{Error, Result};

/// Default number of tested `l` values per period `pi / k`.
pub const DEFAULT_NUM_L: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fs,
    Ml,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Fs => "fs",
            Self::Ml => "ml",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationEstimate {
    /// Index of the chosen candidate in the scan grid.
    pub index: usize,
    pub position: Vec3,
    pub score: f64,
    pub method: Method,
    /// Estimated `l` modulo `pi / k` (ML only).
    pub phase_offset: Option<f64>,
    /// Number of candidates that fit the data equally well (for ML: with
    /// `l` free); more than one means the position is not identifiable.
    pub ties: usize,
}

impl LocationEstimate {
    pub fn is_ambiguous(&self) -> bool {
        self.ties > 1
    }
}

fn check_dims(meas: &ScanMeasurement, grid: &ScanGrid) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Empty("scan grid"));
    }
    if meas.num_slots() != grid.len() {
        return Err(Error::Dimension(format!(
            "measurement has {} slots, grid has {} candidates",
            meas.num_slots(),
            grid.len()
        )));
    }
    Ok(())
}

/// Received power `sum_m |y[m, t]|^2` of every slot.
pub fn fs_scores(meas: &ScanMeasurement) -> Vec<f64> {
    (0..meas.num_slots())
        .map(|t| meas.slot(t).iter().map(|v| v.norm_sqr()).sum())
        .collect()
}

/// Candidate of the slot with the largest received power.
pub fn fs_estimate(meas: &ScanMeasurement, grid: &ScanGrid) -> Result<LocationEstimate> {
    check_dims(meas, grid)?;
    let powers = fs_scores(meas);
    let (best, score) = argmax(&powers);
    Ok(LocationEstimate {
        index: best,
        position: grid.candidate(best)?,
        score,
        method: Method::Fs,
        phase_offset: None,
        ties: powers.iter().filter(|&&p| p == score).count(),
    })
}

/// First index of the maximum.
fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// Phase model of every candidate: `exp(-2 j psi[m, t])`, slot-major.
///
/// Entries where the model signal vanishes carry no phase information and
/// are stored as zero.
#[derive(Debug, Clone)]
pub struct MlModel {
    num_candidates: usize,
    num_slots: usize,
    num_antennas: usize,
    wavenumber: f64,
    weights: Vec<Complex64>,
}

impl MlModel {
    /// Builds the model from noise-free candidate signals, stripping the
    /// source-path factor `exp(-j k l)` of the configured source distance.
    pub fn from_table(table: CandidateTable, wave: &IncidentWave, medium: &Medium) -> Self {
        let k = medium.wavenumber();
        let strip = Complex64::from_polar(1.0, k * wave.source_distance());
        let (nc, nt, nm) = (table.num_candidates(), table.num_slots(), table.num_antennas());
        let weights = (0..nc)
            .into_par_iter()
            .flat_map_iter(|c| {
                table
                    .signals(c)
                    .iter()
                    .map(|s| double_phase_weight(s * strip))
                    .collect::<Vec<_>>()
            })
            .collect();
        Self {
            num_candidates: nc,
            num_slots: nt,
            num_antennas: nm,
            wavenumber: k,
            weights,
        }
    }

    pub fn num_candidates(&self) -> usize {
        self.num_candidates
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    /// `exp(-2 j psi)` of candidate `c`, slot-major.
    pub fn weights(&self, c: usize) -> &[Complex64] {
        let n = self.num_slots * self.num_antennas;
        &self.weights[c * n..(c + 1) * n]
    }

    /// `psi[m, t]` of candidate `c`, slot-major.
    pub fn phases(&self, c: usize) -> Vec<f64> {
        self.weights(c).iter().map(|w| -0.5 * w.arg()).collect()
    }
}

/// `exp(-2 j arg s)`, or zero for `s = 0`.
fn double_phase_weight(s: Complex64) -> Complex64 {
    let n2 = s.norm_sqr();
    if n2 == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        s.conj() * s.conj() / n2
    }
}

/// `1/sigma^2`, or 1 for noiseless data so that the objective stays finite.
fn objective_scale(sigma: f64) -> f64 {
    if sigma > 0.0 {
        1.0 / (sigma * sigma)
    } else {
        1.0
    }
}

/// Reduced log-likelihood `-(1/sigma^2) sum |y|^2 sin^2(arg y - psi + k l)`,
/// evaluated term by term.
///
/// `kl` is the phase offset `k l`; `psi` is slot-major. For `sigma = 0` the
/// `1/sigma^2` factor is replaced by one.
pub fn ml_objective(meas: &ScanMeasurement, psi: &[f64], kl: f64) -> Result<f64> {
    if psi.len() != meas.samples().len() {
        return Err(Error::Dimension(format!(
            "expected {} model phases, got {}",
            meas.samples().len(),
            psi.len()
        )));
    }
    let sum: f64 = meas
        .samples()
        .iter()
        .zip(psi)
        .map(|(y, p)| y.norm_sqr() * (y.arg() - p + kl).sin().powi(2))
        .sum();
    Ok(-objective_scale(meas.noise_sigma()) * sum)
}

/// `C = sum y^2 exp(-2 j psi)` for one candidate.
fn correlation(y2: &[Complex64], weights: &[Complex64]) -> Complex64 {
    y2.iter().zip(weights).map(|(a, w)| a * w).sum()
}

/// Best objective on the `l` grid, the first `l` index reaching it, and
/// `|C|`, the optimum over continuous `l`.
type CandidateFit = (f64, usize, f64);

/// One [`CandidateFit`] per candidate, plus the objective scale.
fn ml_candidates(meas: &ScanMeasurement, model: &MlModel, n_l: usize) -> Result<(Vec<CandidateFit>, f64)> {
    if n_l == 0 {
        return Err(Error::invalid("numerics.n_l", "must be at least 1"));
    }
    if model.num_slots != meas.num_slots() || model.num_antennas != meas.num_antennas() {
        return Err(Error::Dimension("ML model does not match the measurement".into()));
    }
    let scale = objective_scale(meas.noise_sigma());
    let y2: Vec<Complex64> = meas.samples().iter().map(|y| y * y).collect();
    let total: f64 = meas.samples().iter().map(|y| y.norm_sqr()).sum();
    let rotations: Vec<Complex64> = (0..n_l)
        .map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / n_l as f64))
        .collect();
    let best = (0..model.num_candidates)
        .into_par_iter()
        .map(|c| {
            let corr = correlation(&y2, model.weights(c));
            let mut b = (f64::NEG_INFINITY, 0, corr.norm());
            for (i, r) in rotations.iter().enumerate() {
                let f = -scale * 0.5 * (total - (r * corr).re);
                if f > b.0 {
                    b = (f, i, b.2);
                }
            }
            b
        })
        .collect();
    Ok((best, total))
}

/// Best ML objective over the `l` grid for every candidate.
pub fn ml_scores(meas: &ScanMeasurement, model: &MlModel, n_l: usize) -> Result<Vec<f64>> {
    Ok(ml_candidates(meas, model, n_l)?.0.into_iter().map(|b| b.0).collect())
}

/// Brute-force ML search over all candidates and `n_l` offsets
/// `l_i = i pi / (k n_l)`. Ties go to the smallest candidate index, then the
/// smallest `l`.
pub fn ml_estimate(meas: &ScanMeasurement, grid: &ScanGrid, model: &MlModel, n_l: usize) -> Result<LocationEstimate> {
    check_dims(meas, grid)?;
    if model.num_candidates != grid.len() {
        return Err(Error::Dimension("ML model does not match the grid".into()));
    }
    let (best, total) = ml_candidates(meas, model, n_l)?;
    let scores: Vec<f64> = best.iter().map(|b| b.0).collect();
    let (c, score) = argmax(&scores);
    // Candidates indistinguishable once l is free.
    let peak = best.iter().map(|b| b.2).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * total.max(f64::MIN_POSITIVE);
    let ties = best.iter().filter(|b| b.2 >= peak - tol).count();
    Ok(LocationEstimate {
        index: c,
        position: grid.candidate(c)?,
        score,
        method: Method::Ml,
        phase_offset: Some(best[c].1 as f64 * PI / (model.wavenumber * n_l as f64)),
        ties,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::Strategy;
    use crate::em::{RisAperture, UlaReceiver};
    use crate::quadrature::SurfaceGrid;
    use crate::sensing::scan::{add_noise, simulate_scan, ScanSetup};
    use approx::assert_relative_eq;

    fn setup(m: usize) -> ScanSetup {
        let med = Medium::new(0.1, 377.0).unwrap();
        let w = IncidentWave::new(1.0, 30f64.to_radians(), 1000.0, 3.0, &med).unwrap();
        let ap = RisAperture::square(1.0).unwrap();
        let surface = SurfaceGrid::new(&ap, &med, 4.0).unwrap();
        let grid = ScanGrid::yz_square(&Vec3::new(0.0, 2.0, 3.0), 5, 0.15).unwrap();
        let rx = UlaReceiver::new(m, 0.5, Vec3::new(0.0, 2.0, 3.0), 0.0, 3.0).unwrap();
        ScanSetup::new(grid, Strategy::Cylindrical, rx, w, med, ap, surface).unwrap()
    }

    #[test]
    fn noiseless_recovery_fs_and_ml() {
        let s = setup(4);
        let model = MlModel::from_table(s.candidate_table().unwrap(), s.wave(), s.medium());
        for truth_idx in [0, 7, 12, 24] {
            let truth = s.receiver_at(&s.grid().candidate(truth_idx).unwrap());
            let y = simulate_scan(&truth, &s, 0.0, 1).unwrap();
            assert_eq!(fs_estimate(&y, s.grid()).unwrap().index, truth_idx);
            let ml = ml_estimate(&y, s.grid(), &model, 16).unwrap();
            assert_eq!(ml.index, truth_idx);
            assert!(!ml.is_ambiguous());
        }
    }

    #[test]
    fn objective_properties() {
        let s = setup(3);
        let model = MlModel::from_table(s.candidate_table().unwrap(), s.wave(), s.medium());
        let truth_idx = 8;
        let truth = s.receiver_at(&s.grid().candidate(truth_idx).unwrap());
        let clean = simulate_scan(&truth, &s, 0.0, 1).unwrap();
        let psi = model.phases(truth_idx);
        let k = s.medium().wavenumber();
        let kl = (k * s.wave().source_distance()).rem_euclid(PI);
        let at_truth = ml_objective(&clean, &psi, kl).unwrap();
        assert!(at_truth.abs() < 1e-9 * clean.samples().iter().map(|v| v.norm_sqr()).sum::<f64>());

        let noisy = add_noise(&s.noise_free(&truth.center()).unwrap(), 3, 1e-3, 4, 0, Strategy::Cylindrical).unwrap();
        for l in [0.0, 0.013, 0.041] {
            let f0 = ml_objective(&noisy, &psi, k * l).unwrap();
            let f1 = ml_objective(&noisy, &psi, k * (l + PI / k)).unwrap();
            assert!(f0 <= 0.0);
            assert!((f0 - f1).abs() < 1e-9 * f0.abs().max(1.0));
        }
    }

    #[test]
    fn closed_form_matches_literal_objective() {
        let s = setup(3);
        let model = MlModel::from_table(s.candidate_table().unwrap(), s.wave(), s.medium());
        let truth = s.receiver_at(&s.grid().candidate(3).unwrap());
        let y = add_noise(&s.noise_free(&truth.center()).unwrap(), 3, 2e-3, 9, 0, Strategy::Cylindrical).unwrap();
        let scale = 1.0 / (2e-3f64).powi(2);
        let y2: Vec<Complex64> = y.samples().iter().map(|v| v * v).collect();
        let total: f64 = y.samples().iter().map(|v| v.norm_sqr()).sum();
        let k = model.wavenumber();
        for c in [0, 10, 20] {
            let corr = correlation(&y2, model.weights(c));
            for l in [0.0, 0.0123] {
                let fast = -scale * 0.5 * (total - (Complex64::from_polar(1.0, 2.0 * k * l) * corr).re);
                let slow = ml_objective(&y, &model.phases(c), k * l).unwrap();
                assert_relative_eq!(fast, slow, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn fs_invariant_to_scaling_and_ml_to_gauge() {
        let s = setup(4);
        let model = MlModel::from_table(s.candidate_table().unwrap(), s.wave(), s.medium());
        let truth = s.receiver_at(&s.grid().candidate(11).unwrap());
        let y = add_noise(&s.noise_free(&truth.center()).unwrap(), 4, 1e-3, 2, 0, Strategy::Cylindrical).unwrap();
        let fs = fs_estimate(&y, s.grid()).unwrap();
        assert_eq!(fs_estimate(&y.scaled(Complex64::new(3.7, 0.0)), s.grid()).unwrap().index, fs.index);

        let k = model.wavenumber();
        let psi = model.phases(11);
        let shift = 0.37;
        let rotated = y.scaled(Complex64::from_polar(1.0, -shift));
        let a = ml_objective(&y, &psi, 0.4).unwrap();
        let b = ml_objective(&rotated, &psi, 0.4 + shift).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-9);
        let _ = k;
    }

    #[test]
    fn single_slot_single_antenna_is_flagged() {
        let med = Medium::new(0.1, 377.0).unwrap();
        let w = IncidentWave::new(1.0, 30f64.to_radians(), 1000.0, 3.0, &med).unwrap();
        let ap = RisAperture::square(1.0).unwrap();
        let surface = SurfaceGrid::new(&ap, &med, 4.0).unwrap();
        let rx = UlaReceiver::single(Vec3::new(0.0, 2.0, 3.0), 1.0).unwrap();
        let grid1 = ScanGrid::cartesian(vec![0.0], vec![2.0], vec![3.0]).unwrap();
        let s1 = ScanSetup::new(grid1, Strategy::Cylindrical, rx.clone(), w, med, ap, surface.clone()).unwrap();
        let y = simulate_scan(&rx, &s1, 0.0, 0).unwrap();
        assert_eq!(fs_estimate(&y, s1.grid()).unwrap().index, 0);
        // Evaluate the single measurement against a set of hypotheses: each
        // can match the one phase by choice of l, so the objective is flat.
        let hyp = ScanGrid::cartesian(vec![0.0], vec![1.8, 2.0, 2.2], vec![3.0]).unwrap();
        let table: Vec<Vec<Complex64>> = hyp.candidates().iter().map(|c| s1.noise_free(c).unwrap()).collect();
        let k = med.wavenumber();
        let values: Vec<f64> = table
            .iter()
            .map(|s| {
                let psi = vec![(s[0] * Complex64::from_polar(1.0, k * 1000.0)).arg()];
                let kl = (y.samples()[0].arg() - psi[0]).rem_euclid(PI);
                // Choose l to cancel the residual phase exactly.
                ml_objective(&y, &psi, -kl).unwrap()
            })
            .collect();
        for v in &values {
            assert!(v.abs() < 1e-9 * y.samples()[0].norm_sqr());
        }
    }
}
