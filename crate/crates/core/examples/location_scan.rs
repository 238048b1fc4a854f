//! Noise-free focal scan over a polar grid: each slot focuses the plate on
//! one candidate and the array reports its total power. The brightest slot
//! is the estimate.
//!
//! Run with `cargo run --release --example location_scan`.

use risfield::config::ExperimentConfig;
use risfield::experiments::{location_setup, location_truth};
use risfield::sensing::{fs_estimate, simulate_scan};

fn main() -> risfield::Result<()> {
    let cfg = ExperimentConfig::default();
    let s = cfg.scenario()?;
    let setup = location_setup(&cfg, &s)?;
    let truth = location_truth(&cfg, &s);
    let meas = simulate_scan(&setup.receiver_at(&truth), &setup, 0.0, cfg.seed)?;
    let est = fs_estimate(&meas, setup.grid())?;

    let lambda = s.medium.wavelength();
    let polar = |y: f64, z: f64| ((y.hypot(z) / lambda), z.atan2(y).to_degrees());
    let (d0, psi0) = polar(truth.y, truth.z);
    let (d1, psi1) = polar(est.position.y, est.position.z);
    println!("{} candidates", setup.grid().len());
    println!("truth    d = {d0:.3} lambda, psi = {psi0:.3} deg");
    println!("estimate d = {d1:.3} lambda, psi = {psi1:.3} deg (ties: {})", est.ties);
    Ok(())
}
