//! Attitude sensing from the received power of a rotated array.
//!
//! The plate stays focused on the array center while the array turns by
//! `phi`; the power profile `P_r(phi)` is then inverted by monotone lookup.

use rayon::prelude::*;
use serde::Serialize;

use crate::design::{ReflectionDesign, Strategy};
use crate::em::{IncidentWave, Medium, RisAperture, UlaReceiver};
use crate::error::{Error, Result};
use crate::propagation::{channel_vector, received_power, RowKernel};
use crate::quadrature::SurfaceGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttitudeSample {
    pub phi: f64,
    pub power: f64,
}

/// Received power versus attitude for a design focused on the array center.
///
/// `receiver` supplies the center and the array shape; its own attitude is
/// ignored. The transmitted symbol power is the transmitter's `P_t`.
pub fn attitude_power_profile(
    receiver: &UlaReceiver,
    phis: &[f64],
    strategy: Strategy,
    wave: &IncidentWave,
    medium: &Medium,
    aperture: &RisAperture,
    surface: &SurfaceGrid,
) -> Result<Vec<AttitudeSample>> {
    if phis.is_empty() {
        return Err(Error::Empty("attitude grid"));
    }
    let design = ReflectionDesign::focused(strategy, &receiver.center(), aperture, wave, medium)?;
    let rows = if design.is_x_invariant() {
        Some(design.sample_rows(surface.ys())?)
    } else {
        None
    };
    phis.par_iter()
        .map(|&phi| {
            let rx = receiver.rotated_to(phi);
            let h = match &rows {
                Some(r) => RowKernel::new(surface, &rx, wave, medium)?.apply(r)?,
                None => channel_vector(&design, surface, &rx, wave, medium)?,
            };
            Ok(AttitudeSample {
                phi,
                power: received_power(&h, wave.tx_power())?,
            })
        })
        .collect()
}

/// `P(phi_0) - P(phi_last)` in dB.
pub fn dynamic_range_db(profile: &[AttitudeSample]) -> Result<f64> {
    let (first, last) = match (profile.first(), profile.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::Empty("attitude profile")),
    };
    Ok(10.0 * (first.power / last.power).log10())
}

/// Attitude whose profile power equals `power`, by linear interpolation of
/// the inverse profile. Powers outside the profile clamp to its ends.
///
/// The profile must be strictly decreasing in power with increasing `phi`.
pub fn attitude_estimate(power: f64, profile: &[AttitudeSample]) -> Result<f64> {
    if profile.is_empty() {
        return Err(Error::Empty("attitude profile"));
    }
    if !power.is_finite() {
        return Err(Error::invalid("power", format!("must be finite, got {power}")));
    }
    for w in profile.windows(2) {
        if !(w[1].phi > w[0].phi && w[1].power < w[0].power) {
            return Err(Error::invalid(
                "profile",
                format!("not strictly decreasing between phi={} and phi={}", w[0].phi, w[1].phi),
            ));
        }
    }
    let first = profile[0];
    let last = profile[profile.len() - 1];
    if power >= first.power {
        return Ok(first.phi);
    }
    if power <= last.power {
        return Ok(last.phi);
    }
    // First segment whose lower end is at or below `power`.
    let i = profile.partition_point(|s| s.power > power);
    let (a, b) = (profile[i - 1], profile[i]);
    let frac = (a.power - power) / (a.power - b.power);
    Ok(a.phi + frac * (b.phi - a.phi))
}
