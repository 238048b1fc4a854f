//! Received power and capacity of a 128-antenna array for each design,
//! with the SNR referenced to the planar design.
//!
//! Run with `cargo run --release --example capacity`.

use risfield::config::{db_to_linear, ExperimentConfig};
use risfield::design::{ReflectionDesign, Strategy};
use risfield::propagation::{capacity, channel_vector, received_power};

fn main() -> risfield::Result<()> {
    let s = ExperimentConfig::default().scenario()?;
    let rx = &s.receiver;
    let center = rx.center();
    let strategies = [Strategy::Planar, Strategy::Cylindrical, Strategy::Spherical];
    let mut powers = Vec::new();
    for st in strategies {
        let d = ReflectionDesign::focused(st, &center, &s.aperture, &s.wave, &s.medium)?;
        let h = channel_vector(&d, &s.surface, rx, &s.wave, &s.medium)?;
        powers.push(received_power(&h, s.wave.tx_power())?);
    }
    let reference = powers[0];
    for (st, p) in strategies.iter().zip(&powers) {
        println!("{:<12} {p:.4e} W ({:+.2} dB)", st.to_string(), 10.0 * (p / reference).log10());
    }
    println!("\n{:>7} {:>10} {:>12} {:>10}", "SNR dB", "planar", "cylindrical", "spherical");
    for snr in [-10.0, 0.0, 10.0, 20.0, 30.0] {
        let noise = reference / db_to_linear(snr);
        let c: Vec<f64> = powers.iter().map(|&p| capacity(p, noise)).collect::<Result<_, _>>()?;
        println!("{snr:>7.0} {:>10.3} {:>12.3} {:>10.3}", c[0], c[1], c[2]);
    }
    Ok(())
}
