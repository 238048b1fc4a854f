//! Bessel and Hankel values at a few arguments, with the Wronskian residual.
//!
//! Run with `cargo run --example special_functions`.

use std::f64::consts::FRAC_PI_2;

use risfield::special::{bessel_j, bessel_y, hankel2, BesselOrder};

fn main() -> risfield::Result<()> {
    let (zero, one) = (BesselOrder::Zero, BesselOrder::One);
    println!("{:>10} {:>14} {:>14} {:>14} {:>14} {:>10}", "x", "J0", "J1", "Y0", "Y1", "wronskian");
    for x in [1e-3, 0.5, 2.404825557695773, 7.0, 8.0, 25.0, 1e3, 1e4] {
        let (j0, j1) = (bessel_j(zero, x)?, bessel_j(one, x)?);
        let (y0, y1) = (bessel_y(zero, x)?, bessel_y(one, x)?);
        let w = (j1 * y0 - j0 * y1) * FRAC_PI_2 * x - 1.0;
        println!("{x:>10.4e} {j0:>14.6e} {j1:>14.6e} {y0:>14.6e} {y1:>14.6e} {w:>10.1e}");
    }

    // The cylindrical design reads its phase from -H0(2)(kR).
    let h = hankel2(zero, 40.0 * std::f64::consts::PI)?;
    println!("\nH0(2)(40 pi) = {:.9} {:+.9}j, -arg = {:.6} rad", h.re, h.im, -(-h).arg());
    Ok(())
}
