//! Received power as the array rotates about its center while the plate
//! stays focused on that center, and inversion of the profile where it is
//! monotone.
//!
//! Run with `cargo run --release --example attitude_profile`.

use risfield::config::{linspace_step, ExperimentConfig};
use risfield::design::Strategy;
use risfield::experiments::attitude_curve;
use risfield::sensing::{attitude_estimate, AttitudeSample};

fn main() -> risfield::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.receiver.length_m = 0.5;
    let s = cfg.scenario()?;
    let phis = linspace_step(0.0, 90.0, 10.0);
    for st in [Strategy::Planar, Strategy::Cylindrical] {
        let c = attitude_curve(&s, st, [8.0, 8.0], &phis)?;
        println!("{st}: dynamic range {:+.3} dB, argmax at {} deg", c.dynamic_range_db(), c.argmax_deg());
        for (phi, p) in c.phis_deg.iter().zip(&c.powers_w) {
            println!("  phi {phi:>4.0} deg  {:+.4} dB", 10.0 * (p / c.powers_w[0]).log10());
        }
        let samples: Vec<AttitudeSample> = c
            .phis_deg
            .iter()
            .zip(&c.powers_w)
            .map(|(&phi, &power)| AttitudeSample { phi, power })
            .collect();
        match attitude_estimate(c.powers_w[3], &samples) {
            Ok(phi) => println!("  inverted power at 30 deg -> {phi:.2} deg"),
            Err(e) => println!("  profile is not invertible: {e}"),
        }
    }
    Ok(())
}
