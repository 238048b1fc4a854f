//! Normalized power on the arc through a focus for the planar and
//! cylindrical designs at three focal distances.
//!
//! Run with `cargo run --release --example arc_power`.

use risfield::config::{linspace_step, ExperimentConfig};
use risfield::design::Strategy;
use risfield::experiments::arc_curve;

fn main() -> risfield::Result<()> {
    let s = ExperimentConfig::default().scenario()?;
    let thetas = linspace_step(30.0, 60.0, 0.1);
    for focus in [[8.0, 8.0], [28.0, 28.0]] {
        let cyl = arc_curve(&s, Strategy::Cylindrical, focus, &thetas)?;
        let pla = arc_curve(&s, Strategy::Planar, focus, &thetas)?;
        println!("focus (y, z) = ({}, {}) m", focus[0], focus[1]);
        for c in [&cyl, &pla] {
            println!(
                "  {:<12} argmax {:5.1} deg  peak {:.4e}  -3 dB width {:?} deg",
                c.strategy.to_string(),
                c.argmax_deg(),
                c.peak(),
                c.main_lobe_width_deg().map(|w| (w * 1000.0).round() / 1000.0)
            );
        }
        println!("  cylindrical over planar: {:.2} dB\n", 10.0 * (cyl.peak() / pla.peak()).log10());
    }
    Ok(())
}
