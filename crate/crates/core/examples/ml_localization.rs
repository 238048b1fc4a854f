//! One noisy scan on a small y-z grid, located by focal scanning and by the
//! maximum-likelihood phase search.
//!
//! Run with `cargo run --release --example ml_localization`.

use risfield::config::ExperimentConfig;
use risfield::em::Vec3;
use risfield::experiments::ml_setup;
use risfield::sensing::{fs_estimate, ml_estimate, reference_signal_power, sigma_for_snr, simulate_scan, MlModel};

fn main() -> risfield::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.ml.grid_n = 11;
    let s = cfg.scenario()?;
    let setup = ml_setup(&cfg, &s)?;
    let center = Vec3::new(0.0, cfg.ml.center_yz_m[0], cfg.ml.center_yz_m[1]);
    let truth = setup.grid().candidate(setup.grid().len() / 2 + 7)?;
    let model = MlModel::from_table(setup.candidate_table()?, &s.wave, &s.medium);
    let signal = reference_signal_power(&setup, &center)?;

    println!("{} candidates, step {} mm", setup.grid().len(), 1e3 * cfg.ml.grid_step_m);
    println!("truth offset from center: {:+.1} mm", 1e3 * (truth - center).norm());
    for snr in [0.0, 10.0, 20.0] {
        let sigma = sigma_for_snr(signal, snr)?;
        let meas = simulate_scan(&setup.receiver_at(&truth), &setup, sigma, cfg.seed)?;
        let fs = fs_estimate(&meas, setup.grid())?;
        let ml = ml_estimate(&meas, setup.grid(), &model, s.n_l)?;
        println!(
            "SNR {snr:>4.0} dB  FS error {:6.2} mm  ML error {:6.2} mm",
            1e3 * (fs.position - truth).norm(),
            1e3 * (ml.position - truth).norm()
        );
    }
    Ok(())
}
