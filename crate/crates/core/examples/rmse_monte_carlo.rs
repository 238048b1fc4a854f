//! Paired Monte Carlo RMSE of FS and ML localization on a small grid.
//!
//! Run with `cargo run --release --example rmse_monte_carlo`.

use risfield::config::ExperimentConfig;
use risfield::em::Vec3;
use risfield::experiments::ml_setup;
use risfield::sensing::{reference_signal_power, rmse_harness, MlModel};

fn main() -> risfield::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.ml.grid_n = 9;
    let s = cfg.scenario()?;
    let setup = ml_setup(&cfg, &s)?;
    let center = Vec3::new(0.0, cfg.ml.center_yz_m[0], cfg.ml.center_yz_m[1]);
    let model = MlModel::from_table(setup.candidate_table()?, &s.wave, &s.medium);
    let signal = reference_signal_power(&setup, &center)?;
    let report = rmse_harness(&setup, &model, &[0.0, 10.0, 20.0], signal, 40, s.n_l, cfg.seed)?;
    println!("{:>7} {:>12} {:>12}", "SNR dB", "FS RMSE mm", "ML RMSE mm");
    for r in &report.rows {
        println!("{:>7.0} {:>12.3} {:>12.3}", r.snr_db, 1e3 * r.rmse_fs_m, 1e3 * r.rmse_ml_m);
    }
    Ok(())
}
