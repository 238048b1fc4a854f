//! Coarse map of |E_x| in the y-z plane for a cylindrical design, drawn as
//! text. The bright spot sits on the focus.
//!
//! Run with `cargo run --release --example field_map`.

use risfield::config::ExperimentConfig;
use risfield::design::{ReflectionDesign, Strategy};
use risfield::em::Vec3;
use risfield::propagation::SampledAperture;

fn main() -> risfield::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.numerics.samples_per_wavelength = 4.0;
    let s = cfg.scenario()?;
    let focus = Vec3::new(0.0, 6.0, 6.0);
    let design = ReflectionDesign::focused(Strategy::Cylindrical, &focus, &s.aperture, &s.wave, &s.medium)?;
    let ap = SampledAperture::new(&design, &s.surface, &s.wave, &s.medium)?;

    let (n, extent) = (40usize, 12.0);
    let step = extent / n as f64;
    let mut rows = Vec::with_capacity(n);
    let mut peak = 0.0f64;
    for iz in (1..=n).rev() {
        let mut row = Vec::with_capacity(n);
        for iy in 0..n {
            let p = Vec3::new(0.0, (iy as f64 + 0.5) * step, iz as f64 * step);
            let e = ap.field_x(&p)?.norm();
            peak = peak.max(e);
            row.push(e);
        }
        rows.push(row);
    }
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    println!("|E_x| over y, z in (0, {extent}] m, focus at (6, 6) m");
    for row in &rows {
        let line: String = row
            .iter()
            .map(|e| shades[((e / peak) * (shades.len() - 1) as f64).round() as usize])
            .collect();
        println!("|{line}|");
    }
    println!("peak |E_x| = {peak:.4e} V/m");
    Ok(())
}
