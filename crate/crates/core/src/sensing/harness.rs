//! Paired Monte Carlo comparison of FS and ML localization.
//!
//! Trial `i` draws its true position uniformly from the scan candidates
//! (independently of the SNR), then every SNR level adds its own noise to
//! the same noise-free record. Both estimators see the same measurement.

use rand::Rng;
use serde::Serialize;

use super::estimate::{fs_estimate, ml_estimate, MlModel};
use super::scan::{add_noise, stream, ScanSetup, AUX_WORD_POS};
use crate::design::ReflectionDesign;
use crate::em::Vec3;
use crate::error::{Error, Result};
use crate::propagation::RowKernel;
use crate::propagation::channel_vector;

/// Mean per-antenna power `(1/M) sum |h_m|^2` with the planar design pointed
/// at `center` and the array at `center`. This is the signal power in the
/// SNR definition.
pub fn reference_signal_power(setup: &ScanSetup, center: &Vec3) -> Result<f64> {
    let rx = setup.receiver_at(center);
    let design = ReflectionDesign::focused(
        crate::design::Strategy::Planar,
        center,
        setup.aperture(),
        setup.wave(),
        setup.medium(),
    )?;
    let h = if design.is_x_invariant() {
        RowKernel::new(setup.surface(), &rx, setup.wave(), setup.medium())?.apply_design(&design)?
    } else {
        channel_vector(&design, setup.surface(), &rx, setup.wave(), setup.medium())?
    };
    Ok(h.norm_sqr() / h.len() as f64)
}

/// Noise standard deviation giving per-sample SNR `snr_db` against
/// `signal_power`.
pub fn sigma_for_snr(signal_power: f64, snr_db: f64) -> Result<f64> {
    if !(signal_power.is_finite() && signal_power > 0.0) {
        return Err(Error::invalid("signal_power", format!("must be positive, got {signal_power}")));
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid("snr_db", format!("must be finite, got {snr_db}")));
    }
    Ok((signal_power / 10f64.powf(snr_db / 10.0)).sqrt())
}

/// Index of the true candidate in trial `trial`.
pub fn draw_truth(seed: u64, trial: u64, num_candidates: usize) -> usize {
    stream(seed, trial, AUX_WORD_POS).gen_range(0..num_candidates)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseRow {
    pub snr_db: f64,
    pub sigma: f64,
    pub trials: usize,
    pub rmse_fs_m: f64,
    pub rmse_ml_m: f64,
}

/// Per-trial outcome, kept for inspection and determinism checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub snr_db: f64,
    pub trial: u64,
    pub truth_index: usize,
    pub fs_index: usize,
    pub ml_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseReport {
    pub rows: Vec<RmseRow>,
    pub records: Vec<TrialRecord>,
}

/// RMSE of FS and ML at each SNR over `trials` paired trials.
///
/// `signal_power` fixes the SNR reference (see [`reference_signal_power`]).
pub fn rmse_harness(
    setup: &ScanSetup,
    model: &MlModel,
    snrs_db: &[f64],
    signal_power: f64,
    trials: usize,
    n_l: usize,
    seed: u64,
) -> Result<RmseReport> {
    if trials == 0 {
        return Err(Error::invalid("rmse.trials", "must be at least 1"));
    }
    if snrs_db.is_empty() {
        return Err(Error::Empty("SNR list"));
    }
    let sigmas = snrs_db
        .iter()
        .map(|&s| sigma_for_snr(signal_power, s))
        .collect::<Result<Vec<_>>>()?;
    run_trials(setup, model, snrs_db, &sigmas, trials, n_l, seed)
}

/// Same as [`rmse_harness`] with explicit noise levels (`sigma = 0` allowed).
pub fn rmse_harness_sigma(
    setup: &ScanSetup,
    model: &MlModel,
    sigmas: &[f64],
    trials: usize,
    n_l: usize,
    seed: u64,
) -> Result<RmseReport> {
    let labels: Vec<f64> = sigmas.iter().map(|_| f64::NAN).collect();
    run_trials(setup, model, &labels, sigmas, trials, n_l, seed)
}

fn run_trials(
    setup: &ScanSetup,
    model: &MlModel,
    snrs_db: &[f64],
    sigmas: &[f64],
    trials: usize,
    n_l: usize,
    seed: u64,
) -> Result<RmseReport> {
    let grid = setup.grid();
    let m = setup.num_antennas();
    let mut sq = vec![(0.0f64, 0.0f64); sigmas.len()];
    let mut records = Vec::with_capacity(trials * sigmas.len());
    for trial in 0..trials as u64 {
        let truth_index = draw_truth(seed, trial, grid.len());
        let truth = grid.candidate(truth_index)?;
        let clean = setup.noise_free(&truth)?;
        for (level, &sigma) in sigmas.iter().enumerate() {
            // Distinct noise stream per (SNR level, trial).
            let noise_trial = ((level as u64) << 32) | trial;
            let y = add_noise(&clean, m, sigma, seed, noise_trial, setup.strategy())?;
            let fs = fs_estimate(&y, grid)?;
            let ml = ml_estimate(&y, grid, model, n_l)?;
            sq[level].0 += (fs.position - truth).norm_squared();
            sq[level].1 += (ml.position - truth).norm_squared();
            records.push(TrialRecord {
                snr_db: snrs_db[level],
                trial,
                truth_index,
                fs_index: fs.index,
                ml_index: ml.index,
            });
        }
    }
    let n = trials as f64;
    let rows = sigmas
        .iter()
        .zip(snrs_db)
        .zip(&sq)
        .map(|((&sigma, &snr_db), &(fs, ml))| RmseRow {
            snr_db,
            sigma,
            trials,
            rmse_fs_m: (fs / n).sqrt(),
            rmse_ml_m: (ml / n).sqrt(),
        })
        .collect();
    records.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db).then(a.trial.cmp(&b.trial)));
    Ok(RmseReport { rows, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::Strategy;
    use crate::em::{IncidentWave, Medium, RisAperture, UlaReceiver};
    use crate::quadrature::SurfaceGrid;
    use crate::sensing::scan::ScanGrid;

    fn setup() -> ScanSetup {
        let med = Medium::new(0.1, 377.0).unwrap();
        let w = IncidentWave::new(1.0, 30f64.to_radians(), 1000.0, 3.0, &med).unwrap();
        let ap = RisAperture::square(1.0).unwrap();
        let surface = SurfaceGrid::new(&ap, &med, 4.0).unwrap();
        let grid = ScanGrid::yz_square(&Vec3::new(0.0, 2.0, 3.0), 3, 0.2).unwrap();
        let rx = UlaReceiver::new(4, 0.5, Vec3::new(0.0, 2.0, 3.0), 0.0, 3.0).unwrap();
        ScanSetup::new(grid, Strategy::Cylindrical, rx, w, med, ap, surface).unwrap()
    }

    #[test]
    fn noiseless_rmse_is_zero() {
        let s = setup();
        let model = MlModel::from_table(s.candidate_table().unwrap(), s.wave(), s.medium());
        let r = rmse_harness_sigma(&s, &model, &[0.0], 10, 16, 3).unwrap();
        assert_eq!(r.rows[0].rmse_fs_m, 0.0);
        assert_eq!(r.rows[0].rmse_ml_m, 0.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let s = setup();
        let model = MlModel::from_table(s.candidate_table().unwrap(), s.wave(), s.medium());
        let p = reference_signal_power(&s, &Vec3::new(0.0, 2.0, 3.0)).unwrap();
        let a = rmse_harness(&s, &model, &[0.0, 10.0], p, 5, 16, 9).unwrap();
        let b = rmse_harness(&s, &model, &[0.0, 10.0], p, 5, 16, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn snr_conversion() {
        let s = sigma_for_snr(4.0, 20.0).unwrap();
        assert!((s * s - 0.04).abs() < 1e-15);
        assert!(sigma_for_snr(0.0, 1.0).is_err());
    }
}
