//! Experiment manifests: a sectioned TOML document holding every physical
//! and numerical parameter of a run.
//!
//! Angles are written in degrees and gains in dB. [`ExperimentConfig::scenario`]
//! converts them to radians and linear ratios in one place; nothing else in
//! the crate reads the raw values. Every section and key is optional and
//! defaults to the reference setup (`lambda = 0.1 m`,
//! `a = b = 2 m`, `M = 128`, `L = 2 m`, `theta_in = 30 deg`, 5 dB gains).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::design::Strategy;
use crate::em::{IncidentWave, Medium, RisAperture, UlaReceiver, Vec3};
use crate::error::{Error, Result};
use crate::quadrature::{SurfaceGrid, DEFAULT_SAMPLES_PER_WAVELENGTH};
use crate::sensing::DEFAULT_NUM_L;

/// Seeds must fit a TOML integer.
pub const MAX_SEED: u64 = i64::MAX as u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub medium: MediumConfig,
    pub aperture: ApertureConfig,
    pub incident: IncidentConfig,
    pub receiver: ReceiverConfig,
    pub numerics: NumericsConfig,
    pub design: DesignConfig,
    pub arc: ArcConfig,
    pub field_map: FieldMapConfig,
    pub capacity: CapacityConfig,
    pub scan: ScanConfig,
    pub attitude: AttitudeConfig,
    pub ml: MlConfig,
    pub rmse: RmseConfig,
    pub peb: PebConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumConfig {
    pub wavelength_m: f64,
    pub impedance_ohm: f64,
}

/// `a_m` is the side along `e_y`, `b_m` the side along `e_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApertureConfig {
    pub a_m: f64,
    pub b_m: f64,
}

/// `tx_power_w` is optional; when given it must agree with the power implied
/// by `e0_v_per_m`, `tx_gain_db` and `source_distance_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IncidentConfig {
    pub theta_in_deg: f64,
    pub e0_v_per_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_power_w: Option<f64>,
    pub tx_gain_db: f64,
    pub source_distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverConfig {
    pub num_antennas: usize,
    pub length_m: f64,
    pub center_xyz_m: [f64; 3],
    pub attitude_phi_deg: f64,
    pub rx_gain_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub samples_per_wavelength: f64,
    /// Points of the `l` grid in the ML search.
    pub n_l: usize,
}

/// Design used by `design-export` and `field-map`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    pub strategy: Strategy,
    pub focus_xyz_m: [f64; 3],
}

/// Arc-power comparison: each focus `(f_y, f_z)` is observed on the arc of
/// radius `|f|` in the `x = 0` plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArcConfig {
    pub foci_yz_m: Vec<[f64; 2]>,
    pub strategies: Vec<Strategy>,
    pub theta_min_deg: f64,
    pub theta_max_deg: f64,
    pub theta_step_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldMapConfig {
    pub y_min_m: f64,
    pub y_max_m: f64,
    pub z_min_m: f64,
    pub z_max_m: f64,
    pub step_m: f64,
}

/// SNR is the power received with the planar design pointed at the
/// receiver center over the noise power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityConfig {
    pub snr_db: Vec<f64>,
    pub strategies: Vec<Strategy>,
}

/// Polar location scan with a fixed-attitude array parallel to `e_x`.
/// Distances are in wavelengths, angles measured from `e_y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub strategy: Strategy,
    pub d_min_lambda: f64,
    pub d_max_lambda: f64,
    pub d_step_lambda: f64,
    pub psi_min_deg: f64,
    pub psi_max_deg: f64,
    pub psi_step_deg: f64,
    pub truth_d_lambda: f64,
    pub truth_psi_deg: f64,
    /// Per-sample SNR of the measurement; absent means noiseless.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttitudeConfig {
    pub strategies: Vec<Strategy>,
    /// Array centers `(f_y, f_z)`, one profile each.
    pub centers_yz_m: Vec<[f64; 2]>,
    pub phi_min_deg: f64,
    pub phi_max_deg: f64,
    pub phi_step_deg: f64,
    /// Attitude whose power is fed back through the inverse profile.
    pub probe_phi_deg: f64,
}

/// Square `yz` grid shared by `sense-ml`, `peb` and `rmse`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlConfig {
    pub strategy: Strategy,
    pub center_yz_m: [f64; 2],
    pub grid_n: usize,
    pub grid_step_m: f64,
    /// Truth for `sense-ml` and `peb`; absent means the grid center.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_yz_m: Option<[f64; 2]>,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RmseConfig {
    pub snr_db: Vec<f64>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PebConfig {
    pub snr_db: Vec<f64>,
}

const LAMBDA: f64 = 0.1;

fn on_diagonal(f_lambda: f64) -> [f64; 2] {
    [f_lambda * LAMBDA, f_lambda * LAMBDA]
}

/// `(d cos psi, d sin psi)` with `d` in wavelengths and `psi` in degrees.
fn polar_yz(d_lambda: f64, psi_deg: f64) -> [f64; 2] {
    let (s, c) = psi_deg.to_radians().sin_cos();
    [d_lambda * LAMBDA * c, d_lambda * LAMBDA * s]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            medium: MediumConfig::default(),
            aperture: ApertureConfig::default(),
            incident: IncidentConfig::default(),
            receiver: ReceiverConfig::default(),
            numerics: NumericsConfig::default(),
            design: DesignConfig::default(),
            arc: ArcConfig::default(),
            field_map: FieldMapConfig::default(),
            capacity: CapacityConfig::default(),
            scan: ScanConfig::default(),
            attitude: AttitudeConfig::default(),
            ml: MlConfig::default(),
            rmse: RmseConfig::default(),
            peb: PebConfig::default(),
        }
    }
}

impl Default for MediumConfig {
    fn default() -> Self {
        Self {
            wavelength_m: LAMBDA,
            impedance_ohm: 377.0,
        }
    }
}

impl Default for ApertureConfig {
    fn default() -> Self {
        Self {
            a_m: 20.0 * LAMBDA,
            b_m: 20.0 * LAMBDA,
        }
    }
}

impl Default for IncidentConfig {
    fn default() -> Self {
        Self {
            theta_in_deg: 30.0,
            e0_v_per_m: 1.0,
            tx_power_w: None,
            tx_gain_db: 5.0,
            source_distance_m: 1000.0,
        }
    }
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        let [y, z] = on_diagonal(80.0);
        Self {
            num_antennas: 128,
            length_m: 20.0 * LAMBDA,
            center_xyz_m: [0.0, y, z],
            attitude_phi_deg: 0.0,
            rx_gain_db: 5.0,
        }
    }
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            samples_per_wavelength: DEFAULT_SAMPLES_PER_WAVELENGTH,
            n_l: DEFAULT_NUM_L,
        }
    }
}

impl Default for DesignConfig {
    fn default() -> Self {
        let [y, z] = on_diagonal(80.0);
        Self {
            strategy: Strategy::Cylindrical,
            focus_xyz_m: [0.0, y, z],
        }
    }
}

impl Default for ArcConfig {
    fn default() -> Self {
        Self {
            foci_yz_m: vec![on_diagonal(80.0), on_diagonal(180.0), on_diagonal(280.0)],
            strategies: vec![Strategy::Planar, Strategy::Cylindrical],
            theta_min_deg: 0.1,
            theta_max_deg: 89.9,
            theta_step_deg: 0.1,
        }
    }
}

impl Default for FieldMapConfig {
    fn default() -> Self {
        Self {
            y_min_m: 0.0,
            y_max_m: 16.0,
            z_min_m: 0.25,
            z_max_m: 16.0,
            step_m: 0.25,
        }
    }
}

impl Default for CapacityConfig {
    fn default() -> Self {
        Self {
            snr_db: (-2..=6).map(|i| f64::from(i) * 5.0).collect(),
            strategies: vec![Strategy::Planar, Strategy::Cylindrical, Strategy::Spherical],
        }
    }
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Cylindrical,
            d_min_lambda: 94.0,
            d_max_lambda: 300.0,
            d_step_lambda: 2.0,
            psi_min_deg: 1.0,
            psi_max_deg: 89.0,
            psi_step_deg: 1.0,
            truth_d_lambda: 180.0,
            truth_psi_deg: 67.0,
            snr_db: None,
        }
    }
}

impl Default for AttitudeConfig {
    fn default() -> Self {
        Self {
            strategies: vec![Strategy::Planar, Strategy::Cylindrical],
            centers_yz_m: vec![on_diagonal(80.0), on_diagonal(180.0), on_diagonal(280.0)],
            phi_min_deg: 0.0,
            phi_max_deg: 89.0,
            phi_step_deg: 1.0,
            probe_phi_deg: 30.0,
        }
    }
}

impl Default for MlConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Cylindrical,
            center_yz_m: polar_yz(180.0, 67.0),
            grid_n: 21,
            grid_step_m: 0.0015,
            truth_yz_m: None,
            snr_db: 20.0,
        }
    }
}

impl Default for RmseConfig {
    fn default() -> Self {
        Self {
            snr_db: vec![0.0, 10.0, 20.0],
            trials: 200,
        }
    }
}

impl Default for PebConfig {
    fn default() -> Self {
        Self {
            snr_db: vec![0.0, 10.0, 20.0],
        }
    }
}

/// Parses and validates a manifest. Missing keys take their defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = toml::Deserializer::new(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::config(if path == "." { String::new() } else { path }, inner.message().trim())
    })?;
    config.validate()?;
    Ok(config)
}

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be positive, got {v}")))
    }
}

fn finite(path: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be finite, got {v}")))
    }
}

fn non_empty<T>(path: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(Error::config(path, "must not be empty"))
    } else {
        Ok(())
    }
}

fn range(path: &str, lo: f64, hi: f64, step: f64) -> Result<()> {
    finite(&format!("{path}_min"), lo)?;
    finite(&format!("{path}_max"), hi)?;
    positive(&format!("{path}_step"), step)?;
    if hi < lo {
        return Err(Error::config(format!("{path}_max"), format!("must not be below the minimum {lo}")));
    }
    Ok(())
}

/// `lo, lo + step, ...` up to `hi`, tolerating rounding at the end.
/// Points are generated as `lo + i * step` so that integral settings stay
/// exact.
pub fn linspace_step(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| lo + i as f64 * step).collect()
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seed > MAX_SEED {
            return Err(Error::config("seed", format!("must not exceed {MAX_SEED}")));
        }
        positive("medium.wavelength_m", self.medium.wavelength_m)?;
        positive("medium.impedance_ohm", self.medium.impedance_ohm)?;
        positive("aperture.a_m", self.aperture.a_m)?;
        positive("aperture.b_m", self.aperture.b_m)?;

        let inc = &self.incident;
        if !(inc.theta_in_deg.is_finite() && (0.0..90.0).contains(&inc.theta_in_deg)) {
            return Err(Error::config("incident.theta_in_deg", format!("must lie in [0, 90), got {}", inc.theta_in_deg)));
        }
        positive("incident.e0_v_per_m", inc.e0_v_per_m)?;
        if let Some(p) = inc.tx_power_w {
            positive("incident.tx_power_w", p)?;
        }
        finite("incident.tx_gain_db", inc.tx_gain_db)?;
        positive("incident.source_distance_m", inc.source_distance_m)?;

        let rx = &self.receiver;
        if rx.num_antennas == 0 {
            return Err(Error::config("receiver.num_antennas", "must be at least 1"));
        }
        if !(rx.length_m.is_finite() && rx.length_m >= 0.0) {
            return Err(Error::config("receiver.length_m", format!("must be non-negative, got {}", rx.length_m)));
        }
        for v in rx.center_xyz_m {
            finite("receiver.center_xyz_m", v)?;
        }
        positive("receiver.center_xyz_m[2]", rx.center_xyz_m[2])?;
        finite("receiver.attitude_phi_deg", rx.attitude_phi_deg)?;
        finite("receiver.rx_gain_db", rx.rx_gain_db)?;

        positive("numerics.samples_per_wavelength", self.numerics.samples_per_wavelength)?;
        if self.numerics.n_l == 0 {
            return Err(Error::config("numerics.n_l", "must be at least 1"));
        }

        for v in self.design.focus_xyz_m {
            finite("design.focus_xyz_m", v)?;
        }
        positive("design.focus_xyz_m[2]", self.design.focus_xyz_m[2])?;

        let arc = &self.arc;
        non_empty("arc.foci_yz_m", &arc.foci_yz_m)?;
        for f in &arc.foci_yz_m {
            finite("arc.foci_yz_m", f[0])?;
            positive("arc.foci_yz_m", f[1])?;
        }
        non_empty("arc.strategies", &arc.strategies)?;
        range("arc.theta", arc.theta_min_deg, arc.theta_max_deg, arc.theta_step_deg)?;
        if !(arc.theta_min_deg > 0.0 && arc.theta_max_deg < 180.0) {
            return Err(Error::config("arc.theta_min_deg", "arc angles must lie in (0, 180)"));
        }

        let fm = &self.field_map;
        range("field_map.y", fm.y_min_m, fm.y_max_m, fm.step_m)?;
        range("field_map.z", fm.z_min_m, fm.z_max_m, fm.step_m)?;
        positive("field_map.z_min_m", fm.z_min_m)?;

        non_empty("capacity.snr_db", &self.capacity.snr_db)?;
        for &s in &self.capacity.snr_db {
            finite("capacity.snr_db", s)?;
        }
        non_empty("capacity.strategies", &self.capacity.strategies)?;

        let sc = &self.scan;
        range("scan.d", sc.d_min_lambda, sc.d_max_lambda, sc.d_step_lambda)?;
        positive("scan.d_min_lambda", sc.d_min_lambda)?;
        range("scan.psi", sc.psi_min_deg, sc.psi_max_deg, sc.psi_step_deg)?;
        if !(sc.psi_min_deg > 0.0 && sc.psi_max_deg < 180.0) {
            return Err(Error::config("scan.psi_min_deg", "scan angles must lie in (0, 180)"));
        }
        positive("scan.truth_d_lambda", sc.truth_d_lambda)?;
        if !(sc.truth_psi_deg > 0.0 && sc.truth_psi_deg < 180.0) {
            return Err(Error::config("scan.truth_psi_deg", "must lie in (0, 180)"));
        }
        if let Some(s) = sc.snr_db {
            finite("scan.snr_db", s)?;
        }

        let at = &self.attitude;
        non_empty("attitude.strategies", &at.strategies)?;
        non_empty("attitude.centers_yz_m", &at.centers_yz_m)?;
        for c in &at.centers_yz_m {
            finite("attitude.centers_yz_m", c[0])?;
            positive("attitude.centers_yz_m", c[1])?;
        }
        range("attitude.phi", at.phi_min_deg, at.phi_max_deg, at.phi_step_deg)?;
        finite("attitude.probe_phi_deg", at.probe_phi_deg)?;

        let ml = &self.ml;
        finite("ml.center_yz_m", ml.center_yz_m[0])?;
        positive("ml.center_yz_m", ml.center_yz_m[1])?;
        if ml.grid_n == 0 {
            return Err(Error::config("ml.grid_n", "must be at least 1"));
        }
        positive("ml.grid_step_m", ml.grid_step_m)?;
        let half = (ml.grid_n as f64 - 1.0) / 2.0 * ml.grid_step_m;
        if ml.center_yz_m[1] - half <= 0.0 {
            return Err(Error::config("ml.grid_step_m", "grid extends below the plate"));
        }
        if let Some(t) = ml.truth_yz_m {
            finite("ml.truth_yz_m", t[0])?;
            positive("ml.truth_yz_m", t[1])?;
        }
        finite("ml.snr_db", ml.snr_db)?;

        non_empty("rmse.snr_db", &self.rmse.snr_db)?;
        for &s in &self.rmse.snr_db {
            finite("rmse.snr_db", s)?;
        }
        if self.rmse.trials == 0 {
            return Err(Error::config("rmse.trials", "must be at least 1"));
        }
        non_empty("peb.snr_db", &self.peb.snr_db)?;
        for &s in &self.peb.snr_db {
            finite("peb.snr_db", s)?;
        }

        // Cross-checks the physical constructors perform.
        self.scenario().map(|_| ())
    }

    /// Canonical TOML text. `parse_config(&c.to_toml()?) == c`.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("", e.to_string()))
    }

    /// SHA-256 of the canonical text, lowercase hex.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Physical objects with all unit conversions applied.
    pub fn scenario(&self) -> Result<Scenario> {
        let at = |path: &'static str| move |e: Error| Error::config(path, e.to_string());
        let medium = Medium::new(self.medium.wavelength_m, self.medium.impedance_ohm).map_err(at("medium"))?;
        let aperture = RisAperture::new(self.aperture.a_m, self.aperture.b_m).map_err(at("aperture"))?;
        let inc = &self.incident;
        let theta_in = inc.theta_in_deg.to_radians();
        let tx_gain = db_to_linear(inc.tx_gain_db);
        let wave = match inc.tx_power_w {
            Some(p) => IncidentWave::with_explicit_tx_power(inc.e0_v_per_m, theta_in, inc.source_distance_m, tx_gain, p, &medium),
            None => IncidentWave::new(inc.e0_v_per_m, theta_in, inc.source_distance_m, tx_gain, &medium),
        }
        .map_err(at("incident"))?;
        let rx = &self.receiver;
        let receiver = UlaReceiver::new(
            rx.num_antennas,
            rx.length_m,
            Vec3::from(rx.center_xyz_m),
            rx.attitude_phi_deg.to_radians(),
            db_to_linear(rx.rx_gain_db),
        )
        .map_err(at("receiver"))?;
        let surface =
            SurfaceGrid::new(&aperture, &medium, self.numerics.samples_per_wavelength).map_err(at("numerics"))?;
        Ok(Scenario {
            medium,
            aperture,
            wave,
            receiver,
            surface,
            n_l: self.numerics.n_l,
        })
    }
}

/// Validated physical setup derived from a config.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub medium: Medium,
    pub aperture: RisAperture,
    pub wave: IncidentWave,
    /// Template array; experiments move and rotate copies of it.
    pub receiver: UlaReceiver,
    pub surface: SurfaceGrid,
    pub n_l: usize,
}
