//! Real Bessel functions of orders 0 and 1 and the Hankel function of the
//! second kind built from them.
//!
//! Small arguments (`x <= 12`) use the ascending power series; larger
//! arguments use Hankel's asymptotic expansion truncated at its smallest
//! term. Both branches agree to well below `1e-8` at the switch point.
//!
//! Every evaluation is a pure function of its arguments and does not
//! allocate, so the kernels are safe to call from quadrature loops on any
//! thread.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant, 0.57721566490153286060...
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Arguments at or below this value use the power series.
pub const SERIES_LIMIT: f64 = 12.0;

/// Below this argument `Y0`/`Y1` are reported as divergent.
pub const Y_UNDERFLOW: f64 = 1e-300;

const SERIES_MAX_TERMS: usize = 80;
const ASYMPTOTIC_MAX_TERMS: usize = 60;

/// Order of a Bessel or Hankel function. Only 0 and 1 are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BesselOrder {
    Zero,
    One,
}

impl BesselOrder {
    pub fn new(order: u32) -> Result<Self> {
        match order {
            0 => Ok(Self::Zero),
            1 => Ok(Self::One),
            n => Err(Error::domain(format!(
                "Bessel order {n} is not supported (only 0 and 1)"
            ))),
        }
    }

    pub fn as_u32(self) -> u32 {
        match self {
            Self::Zero => 0,
            Self::One => 1,
        }
    }
}

impl TryFrom<u32> for BesselOrder {
    type Error = Error;

    fn try_from(order: u32) -> Result<Self> {
        Self::new(order)
    }
}

/// Bessel function of the first kind, `J_order(x)` for `x >= 0`.
pub fn bessel_j(order: BesselOrder, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("bessel_j argument {x} is not finite")));
    }
    if x < 0.0 {
        return Err(Error::domain(format!("bessel_j argument {x} is negative")));
    }
    Ok(if x <= SERIES_LIMIT {
        j_series(order, x)
    } else {
        j_asymptotic(order, x)
    })
}

/// Bessel function of the second kind, `Y_order(x)` for `x > 0`.
pub fn bessel_y(order: BesselOrder, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("bessel_y argument {x} is not finite")));
    }
    if x <= 0.0 {
        return Err(Error::domain(format!(
            "bessel_y argument {x} is not positive (singular at the origin)"
        )));
    }
    if x < Y_UNDERFLOW {
        return Err(Error::domain(format!(
            "bessel_y argument {x} is too close to the singularity at 0"
        )));
    }
    Ok(if x <= SERIES_LIMIT {
        y_series(order, x)
    } else {
        y_asymptotic(order, x)
    })
}

/// Hankel function of the second kind, `H_order^(2)(x) = J(x) - j Y(x)`.
pub fn hankel2(order: BesselOrder, x: f64) -> Result<Complex64> {
    let j = bessel_j(order, x)?;
    let y = bessel_y(order, x)?;
    Ok(Complex64::new(j, -y))
}

/// Evaluates both branches at `x` regardless of the switch point.
///
/// Returns `(series, asymptotic)` pairs for `J` and `Y`; used to check the
/// continuity of the piecewise definition.
pub fn branch_values(order: BesselOrder, x: f64) -> ((f64, f64), (f64, f64)) {
    (
        (j_series(order, x), j_asymptotic(order, x)),
        (y_series(order, x), y_asymptotic(order, x)),
    )
}

// J0 = sum (-x^2/4)^m / (m!)^2,  J1 = (x/2) sum (-x^2/4)^m / (m! (m+1)!)
fn j_series(order: BesselOrder, x: f64) -> f64 {
    let q = -0.25 * x * x;
    match order {
        BesselOrder::Zero => {
            let mut term = 1.0;
            let mut sum = 1.0;
            for m in 1..SERIES_MAX_TERMS {
                let mf = m as f64;
                term *= q / (mf * mf);
                sum += term;
                if term.abs() <= f64::EPSILON * 1e-3 * sum.abs() {
                    break;
                }
            }
            sum
        }
        BesselOrder::One => {
            let mut term = 0.5 * x;
            let mut sum = term;
            for m in 1..SERIES_MAX_TERMS {
                let mf = m as f64;
                term *= q / (mf * (mf + 1.0));
                sum += term;
                if term.abs() <= f64::EPSILON * 1e-3 * sum.abs() {
                    break;
                }
            }
            sum
        }
    }
}

// Y0 = (2/pi)(ln(x/2) + gamma) J0 + (2/pi) sum_{m>=1} (-1)^{m+1} H_m (x^2/4)^m / (m!)^2
// Y1 = (2/pi)(ln(x/2) + gamma) J1 - 2/(pi x)
//      - (1/pi)(x/2) sum_{m>=0} (-1)^m (H_m + H_{m+1}) (x^2/4)^m / (m! (m+1)!)
//      where the gamma terms of the digamma values are folded into the log term.
fn y_series(order: BesselOrder, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    match order {
        BesselOrder::Zero => {
            let j0 = j_series(BesselOrder::Zero, x);
            let mut term = 1.0;
            let mut harmonic = 0.0;
            let mut sum = 0.0;
            for m in 1..SERIES_MAX_TERMS {
                let mf = m as f64;
                term *= -q / (mf * mf);
                harmonic += 1.0 / mf;
                let contrib = -term * harmonic;
                sum += contrib;
                if contrib.abs() <= f64::EPSILON * 1e-3 * sum.abs() && m > 2 {
                    break;
                }
            }
            FRAC_2_PI * (log_term * j0 + sum)
        }
        BesselOrder::One => {
            let j1 = j_series(BesselOrder::One, x);
            let mut term = 1.0;
            let mut h_m = 0.0;
            let mut h_m1 = 1.0;
            let mut sum = term * (h_m + h_m1);
            for m in 1..SERIES_MAX_TERMS {
                let mf = m as f64;
                term *= -q / (mf * (mf + 1.0));
                h_m += 1.0 / mf;
                h_m1 += 1.0 / (mf + 1.0);
                let contrib = term * (h_m + h_m1);
                sum += contrib;
                if contrib.abs() <= f64::EPSILON * 1e-3 * sum.abs() && m > 2 {
                    break;
                }
            }
            FRAC_2_PI * log_term * j1 - FRAC_2_PI / x - 0.5 * x * sum / PI
        }
    }
}

/// Hankel's `P` and `Q` auxiliary series, truncated just before the
/// smallest term.
fn hankel_pq(order: BesselOrder, x: f64) -> (f64, f64) {
    let mu = 4.0 * f64::from(order.as_u32()).powi(2);
    let eight_x = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    // a_k(n) / x^k, built incrementally.
    let mut term = 1.0_f64;
    let mut last = f64::INFINITY;
    for k in 1..ASYMPTOTIC_MAX_TERMS {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = term * (mu - odd * odd) / (kf * eight_x);
        if next.abs() >= last || next == 0.0 {
            break;
        }
        last = next.abs();
        term = next;
        // Signs: P = a0 - a2 + a4 - ..., Q = a1 - a3 + ...
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if last < f64::EPSILON * 1e-3 {
            break;
        }
    }
    (p, q)
}

fn asymptotic_phase(order: BesselOrder, x: f64) -> f64 {
    match order {
        BesselOrder::Zero => x - FRAC_PI_4,
        BesselOrder::One => x - 3.0 * FRAC_PI_4,
    }
}

fn j_asymptotic(order: BesselOrder, x: f64) -> f64 {
    let (p, q) = hankel_pq(order, x);
    let (s, c) = asymptotic_phase(order, x).sin_cos();
    (FRAC_2_PI / x).sqrt() * (p * c - q * s)
}

fn y_asymptotic(order: BesselOrder, x: f64) -> f64 {
    let (p, q) = hankel_pq(order, x);
    let (s, c) = asymptotic_phase(order, x).sin_cos();
    (FRAC_2_PI / x).sqrt() * (p * s + q * c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn order_restricted_to_zero_and_one() {
        assert_eq!(BesselOrder::new(0).unwrap(), BesselOrder::Zero);
        assert_eq!(BesselOrder::try_from(1).unwrap(), BesselOrder::One);
        assert!(BesselOrder::new(2).is_err());
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_j(BesselOrder::Zero, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(BesselOrder::One, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn values_at_one() {
        // Power-series oracle with 40 terms, summed independently.
        let mut j0 = 0.0;
        let mut fact = 1.0;
        for m in 0..40 {
            if m > 0 {
                fact *= m as f64;
            }
            j0 += (-0.25f64).powi(m) / (fact * fact);
        }
        assert_abs_diff_eq!(bessel_j(BesselOrder::Zero, 1.0).unwrap(), j0, epsilon = 1e-15);
        assert_abs_diff_eq!(j0, 0.765_197_686_557_966_6, epsilon = 1e-15);
        assert_abs_diff_eq!(
            bessel_y(BesselOrder::Zero, 1.0).unwrap(),
            0.088_256_964_215_676_96,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            bessel_y(BesselOrder::One, 1.0).unwrap(),
            -0.781_212_821_300_288_7,
            epsilon = 1e-14
        );
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_j(BesselOrder::Zero, f64::NAN).is_err());
        assert!(bessel_j(BesselOrder::Zero, f64::INFINITY).is_err());
        assert!(bessel_j(BesselOrder::One, -1.0).is_err());
        assert!(bessel_y(BesselOrder::Zero, 0.0).is_err());
        assert!(bessel_y(BesselOrder::Zero, -2.0).is_err());
        assert!(bessel_y(BesselOrder::Zero, 1e-301).is_err());
        assert!(bessel_y(BesselOrder::Zero, 1e-299).unwrap() < -400.0);
        assert!(hankel2(BesselOrder::One, 0.0).is_err());
    }

    #[test]
    fn hankel_is_bitwise_composition() {
        for &x in &[0.3, 1.0, 7.5, 12.0, 12.000001, 40.0, 3e3] {
            for order in [BesselOrder::Zero, BesselOrder::One] {
                let h = hankel2(order, x).unwrap();
                assert_eq!(h.re.to_bits(), bessel_j(order, x).unwrap().to_bits());
                assert_eq!(h.im.to_bits(), (-bessel_y(order, x).unwrap()).to_bits());
            }
        }
    }

    #[test]
    fn hankel_large_argument_matches_leading_asymptotics() {
        let x = 500.0;
        let h = hankel2(BesselOrder::Zero, x).unwrap();
        let mag = (2.0 / (PI * x)).sqrt();
        assert!((h.norm() - mag).abs() / mag < 1e-4);
        let expected = -(x - FRAC_PI_4);
        let diff = (h.arg() - expected).rem_euclid(2.0 * PI);
        let diff = diff.min(2.0 * PI - diff);
        assert!(diff < 1e-3, "phase mismatch {diff}");
    }

    #[test]
    fn branches_agree_at_switch_point() {
        for order in [BesselOrder::Zero, BesselOrder::One] {
            let ((js, ja), (ys, ya)) = branch_values(order, SERIES_LIMIT);
            assert!((js - ja).abs() < 1e-8, "J{order:?}: {js} vs {ja}");
            assert!((ys - ya).abs() < 1e-8, "Y{order:?}: {ys} vs {ya}");
        }
    }

    #[test]
    fn wronskian_holds() {
        let mut x = 0.1;
        while x <= 1000.0 {
            let j0 = bessel_j(BesselOrder::Zero, x).unwrap();
            let j1 = bessel_j(BesselOrder::One, x).unwrap();
            let y0 = bessel_y(BesselOrder::Zero, x).unwrap();
            let y1 = bessel_y(BesselOrder::One, x).unwrap();
            let r = j1 * y0 - j0 * y1 - 2.0 / (PI * x);
            assert!(r.abs() < 1e-9, "x={x} residual={r}");
            x *= 1.07;
        }
    }

    #[test]
    fn j0_derivative_is_minus_j1() {
        let mut x: f64 = 0.05;
        while x < 2000.0 {
            let h = 1e-3;
            let d = (bessel_j(BesselOrder::Zero, x + h).unwrap()
                - bessel_j(BesselOrder::Zero, x - h).unwrap())
                / (2.0 * h);
            let j1 = bessel_j(BesselOrder::One, x).unwrap();
            assert!((d + j1).abs() < 1e-7, "x={x}: {d} vs {}", -j1);
            x *= 1.13;
        }
    }
}
