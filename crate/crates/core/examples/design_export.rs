//! Amplitude and phase of the three reflection designs along the plate's
//! center row, plus the power each one re-radiates.
//!
//! Run with `cargo run --example design_export`.

use risfield::config::ExperimentConfig;
use risfield::design::{incident_power, ReflectionDesign, Strategy};
use risfield::em::Vec3;

fn main() -> risfield::Result<()> {
    let s = ExperimentConfig::default().scenario()?;
    let focus = Vec3::new(0.0, 8.0, 8.0);
    let p_in = incident_power(&s.aperture, &s.wave, &s.medium);
    println!("incident power on the plate: {p_in:.6e} W");

    for strategy in [Strategy::Planar, Strategy::Cylindrical, Strategy::Spherical] {
        let d = ReflectionDesign::focused(strategy, &focus, &s.aperture, &s.wave, &s.medium)?;
        println!("\n{}", d.describe());
        println!(
            "  reflected/incident = {:.6}, max tau = {:.4}",
            d.reflected_power(&s.aperture) / p_in,
            d.max_tau(&s.surface)?
        );
        for y in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let (tau, beta) = d.evaluate(0.0, y)?;
            println!("  y = {y:+.2} m  tau = {tau:.4}  beta = {beta:+.4} rad");
        }
    }
    Ok(())
}
