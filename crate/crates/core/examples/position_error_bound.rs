//! Fisher information and position error bound for the y-z location of the
//! array under a focal scan.
//!
//! Run with `cargo run --release --example position_error_bound`.

use risfield::config::ExperimentConfig;
use risfield::em::Vec3;
use risfield::experiments::ml_setup;
use risfield::sensing::{peb, reference_signal_power, sigma_for_snr, signal_jacobian, Axis};

fn main() -> risfield::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.ml.grid_n = 11;
    let s = cfg.scenario()?;
    let setup = ml_setup(&cfg, &s)?;
    let center = Vec3::new(0.0, cfg.ml.center_yz_m[0], cfg.ml.center_yz_m[1]);
    let jac = signal_jacobian(&setup.receiver_at(&center), &setup)?;
    let signal = reference_signal_power(&setup, &center)?;
    for snr in [0.0, 10.0, 20.0, 30.0] {
        let sigma = sigma_for_snr(signal, snr)?;
        let (fim, bound) = peb(&jac, sigma, &Axis::IN_PLANE)?;
        let ev = fim.eigenvalues();
        println!("SNR {snr:>4.0} dB  PEB {:8.3} mm  Fisher eigenvalues {:.3e}, {:.3e}", 1e3 * bound, ev[0], ev[1]);
    }
    Ok(())
}
