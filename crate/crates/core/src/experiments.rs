//! Batch experiments behind the command-line subcommands.
//!
//! [`run`] is pure: it returns the summary and the rendered output files
//! without touching the filesystem, so identical configs give identical
//! bytes. Every CSV starts with a comment line naming the tool version, the
//! subcommand, the config hash and the seed; numbers use 17 significant
//! digits. Wall-clock runtime is deliberately absent from all files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{linspace_step, ExperimentConfig, Scenario};
use crate::design::{centered_solid_angle, solid_angle, FocalPoint, ReflectionDesign, Strategy};
use crate::em::{radiating_near_field_bounds, UlaReceiver, Vec3};
use crate::error::{Error, Result};
use crate::propagation::{
    capacity, channel_vector, received_power, RowKernel, SampledAperture, SurfaceGrid,
};
use crate::sensing::{
    attitude_estimate, attitude_power_profile, dynamic_range_db, fs_estimate, fs_scores, ml_estimate, ml_scores,
    peb, reference_signal_power, rmse_harness, sigma_for_snr, signal_jacobian, simulate_scan, Axis, MlModel,
    ScanGrid, ScanSetup,
};
use crate::special::{bessel_j, bessel_y, BesselOrder};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 40-digit reference values of `J0, J1, Y0, Y1`, rounded to double.
pub const BESSEL_REFERENCE: &str = include_str!("../data/bessel_reference.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    DesignExport,
    ArcPower,
    FieldMap,
    Capacity,
    SenseLocation,
    SenseAttitude,
    SenseMl,
    Peb,
    Rmse,
    Selftest,
}

impl Subcommand {
    pub const ALL: [Subcommand; 10] = [
        Self::DesignExport,
        Self::ArcPower,
        Self::FieldMap,
        Self::Capacity,
        Self::SenseLocation,
        Self::SenseAttitude,
        Self::SenseMl,
        Self::Peb,
        Self::Rmse,
        Self::Selftest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::DesignExport => "design-export",
            Self::ArcPower => "arc-power",
            Self::FieldMap => "field-map",
            Self::Capacity => "capacity",
            Self::SenseLocation => "sense-location",
            Self::SenseAttitude => "sense-attitude",
            Self::SenseMl => "sense-ml",
            Self::Peb => "peb",
            Self::Rmse => "rmse",
            Self::Selftest => "selftest",
        }
    }

    /// File stem of the main outputs.
    fn stem(self) -> String {
        self.name().replace('-', "_")
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid("subcommand", format!("unknown subcommand `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// Result of one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub subcommand: Subcommand,
    /// Also rendered as `<stem>.json` among `files`.
    pub summary: Value,
    pub files: Vec<OutputFile>,
}

impl Report {
    /// False only for a self-test with a failing check.
    pub fn passed(&self) -> bool {
        self.summary["result"]["passed"] != Value::Bool(false)
    }

    pub fn file(&self, name: &str) -> Option<&OutputFile> {
        self.files.iter().find(|f| f.name == name)
    }

    /// Writes every output file into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        self.files
            .iter()
            .map(|f| {
                let path = dir.join(&f.name);
                std::fs::write(&path, &f.contents)?;
                Ok(path)
            })
            .collect()
    }
}

enum Cell {
    F(f64),
    I(u64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::I(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Self::I(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::S(v.to_string())
    }
}

impl From<Strategy> for Cell {
    fn from(v: Strategy) -> Self {
        Self::S(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::S(v.to_owned())
    }
}

macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$(Cell::from($v)),*] };
}

/// Plain CSV with a provenance comment, optional extra comment lines and a
/// column header.
struct Table {
    columns: &'static [&'static str],
    notes: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &'static [&'static str]) -> Self {
        Self {
            columns,
            notes: Vec::new(),
            rows: Vec::new(),
        }
    }

    fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self, ctx: &Context) -> String {
        let mut out = format!(
            "# risfield {VERSION} subcommand={} config_sha256={} seed={}\n",
            ctx.subcommand, ctx.hash, ctx.seed
        );
        for n in &self.notes {
            out.push_str("# ");
            out.push_str(n);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            let fields: Vec<String> = r
                .iter()
                .map(|c| match c {
                    Cell::F(v) => format!("{v:.16e}"),
                    Cell::I(v) => v.to_string(),
                    Cell::S(s) => s.clone(),
                })
                .collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

struct Context<'a> {
    subcommand: Subcommand,
    config: &'a ExperimentConfig,
    hash: String,
    seed: u64,
    files: Vec<OutputFile>,
}

impl Context<'_> {
    fn csv(&mut self, name: &str, table: &Table) -> String {
        let contents = table.render(self);
        self.files.push(OutputFile {
            name: name.to_owned(),
            contents,
        });
        name.to_owned()
    }

    fn main_csv(&mut self, table: &Table) -> String {
        let name = format!("{}.csv", self.subcommand.stem());
        self.csv(&name, table)
    }
}

/// Runs `subcommand` on a validated config.
pub fn run(subcommand: Subcommand, config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let scenario = config.scenario()?;
    let s = &scenario;
    let mut ctx = Context {
        subcommand,
        config,
        hash: config.hash()?,
        seed: config.seed,
        files: Vec::new(),
    };
    let result = match subcommand {
        Subcommand::DesignExport => design_export(&mut ctx, s)?,
        Subcommand::ArcPower => arc_power(&mut ctx, s)?,
        Subcommand::FieldMap => field_map(&mut ctx, s)?,
        Subcommand::Capacity => capacity_table(&mut ctx, s)?,
        Subcommand::SenseLocation => sense_location(&mut ctx, s)?,
        Subcommand::SenseAttitude => sense_attitude(&mut ctx, s)?,
        Subcommand::SenseMl => sense_ml(&mut ctx, s)?,
        Subcommand::Peb => peb_table(&mut ctx, s)?,
        Subcommand::Rmse => rmse_table(&mut ctx, s)?,
        Subcommand::Selftest => selftest(&mut ctx, s)?,
    };
    let files: Vec<&str> = ctx.files.iter().map(|f| f.name.as_str()).collect();
    let json_name = format!("{}.json", subcommand.stem());
    let mut listed: Vec<&str> = files.clone();
    listed.push(&json_name);
    let summary = json!({
        "subcommand": subcommand.name(),
        "version": VERSION,
        "config_sha256": ctx.hash,
        "seed": ctx.seed,
        "files": listed,
        "result": result,
    });
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    ctx.files.push(OutputFile {
        name: json_name,
        contents: text,
    });
    Ok(Report {
        subcommand,
        summary,
        files: ctx.files,
    })
}

fn vec_json(v: &Vec3) -> Value {
    json!([v.x, v.y, v.z])
}

fn yz(p: [f64; 2]) -> Vec3 {
    Vec3::new(0.0, p[0], p[1])
}

/// Width of the main lobe around the global maximum at half the peak value,
/// with linear interpolation between samples. `None` if the lobe does not
/// fall to half power inside the sampled range on both sides.
pub fn main_lobe_width(xs: &[f64], values: &[f64]) -> Option<f64> {
    if xs.len() != values.len() || xs.is_empty() {
        return None;
    }
    let (peak_i, peak) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, v)| if v > b.1 { (i, v) } else { b });
    let half = 0.5 * peak;
    let cross = |i: usize, j: usize| xs[i] + (values[i] - half) / (values[i] - values[j]) * (xs[j] - xs[i]);
    let right = (peak_i + 1..xs.len()).find(|&j| values[j] < half).map(|j| cross(j - 1, j))?;
    let left = (0..peak_i).rev().find(|&j| values[j] < half).map(|j| cross(j + 1, j))?;
    Some(right - left)
}

/// Index of the first maximum.
fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b })
        .0
}

fn focused(s: &Scenario, strategy: Strategy, target: &Vec3) -> Result<ReflectionDesign> {
    ReflectionDesign::focused(strategy, target, &s.aperture, &s.wave, &s.medium)
}

/// `||h||^2 P_t` for a design and array.
fn power_at(s: &Scenario, design: &ReflectionDesign, rx: &UlaReceiver) -> Result<f64> {
    let h = if design.is_x_invariant() {
        RowKernel::new(&s.surface, rx, &s.wave, &s.medium)?.apply_design(design)?
    } else {
        channel_vector(design, &s.surface, rx, &s.wave, &s.medium)?
    };
    received_power(&h, s.wave.tx_power())
}

fn design_export(ctx: &mut Context, s: &Scenario) -> Result<Value> {
    let cfg = &ctx.config.design;
    let focus = Vec3::from(cfg.focus_xyz_m);
    let design = focused(s, cfg.strategy, &focus)?;
    let mut table = Table::new(&["x_m", "y_m", "tau", "beta_rad"]);
    table.note(design.describe());
    let grid = &s.surface;
    let values: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (x, y) = grid.node(i);
            design.evaluate(x, y)
        })
        .collect::<Result<_>>()?;
    let max_tau = values.iter().map(|v| v.0).fold(0.0, f64::max);
    table.note(format!("max_tau={max_tau:.16e}"));
    for (i, (tau, beta)) in values.into_iter().enumerate() {
        let (x, y) = grid.node(i);
        table.push(row![x, y, tau, beta]);
    }
    let file = ctx.main_csv(&table);
    Ok(json!({
        "csv": file,
        "strategy": cfg.strategy,
        "focus_xyz_m": vec_json(&focus),
        "design": design.describe(),
        "nodes": grid.len(),
        "max_tau": max_tau,
        "reflected_power_w": design.reflected_power(&s.aperture),
        "incident_power_w": crate::design::incident_power(&s.aperture, &s.wave, &s.medium),
    }))
}

/// One arc-power curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcCurve {
    pub strategy: Strategy,
    pub focus_yz_m: [f64; 2],
    pub thetas_deg: Vec<f64>,
    pub p_n: Vec<f64>,
}

impl ArcCurve {
    pub fn argmax_deg(&self) -> f64 {
        self.thetas_deg[argmax(&self.p_n)]
    }

    pub fn peak(&self) -> f64 {
        self.p_n[argmax(&self.p_n)]
    }

    /// Half-power main-lobe width in degrees.
    pub fn main_lobe_width_deg(&self) -> Option<f64> {
        main_lobe_width(&self.thetas_deg, &self.p_n)
    }
}

/// Normalized power on the arc through `focus` for a design focused there.
pub fn arc_curve(s: &Scenario, strategy: Strategy, focus_yz_m: [f64; 2], thetas_deg: &[f64]) -> Result<ArcCurve> {
    let focus = yz(focus_yz_m);
    let design = focused(s, strategy, &focus)?;
    let ap = SampledAperture::new(&design, &s.surface, &s.wave, &s.medium)?;
    let thetas: Vec<f64> = thetas_deg.iter().map(|t| t.to_radians()).collect();
    let p_n = ap.arc_profile(focus.norm(), &thetas, &s.medium)?;
    Ok(ArcCurve {
        strategy,
        focus_yz_m,
        thetas_deg: thetas_deg.to_vec(),
        p_n,
    })
}

fn arc_power(ctx: &mut Context, s: &Scenario) -> Result<Value> {
    let cfg = &ctx.config.arc;
    let lambda = s.medium.wavelength();
    let thetas = linspace_step(cfg.theta_min_deg, cfg.theta_max_deg, cfg.theta_step_deg);
    let mut table = Table::new(&["focus_y_m", "focus_z_m", "strategy", "theta_deg", "p_n", "p_n_db_rel_max"]);
    table.note("p_n_db_rel_max is relative to the largest p_n over all strategies at the same focus");
    let mut foci = Vec::new();
    for &focus in &cfg.foci_yz_m {
        let curves = cfg
            .strategies
            .iter()
            .map(|&st| arc_curve(s, st, focus, &thetas))
            .collect::<Result<Vec<_>>>()?;
        let top = curves.iter().map(ArcCurve::peak).fold(f64::NEG_INFINITY, f64::max);
        let mut per = Vec::new();
        for c in &curves {
            for (t, p) in c.thetas_deg.iter().zip(&c.p_n) {
                table.push(row![focus[0], focus[1], c.strategy, *t, *p, 10.0 * (p / top).log10()]);
            }
            per.push(json!({
                "strategy": c.strategy,
                "argmax_deg": c.argmax_deg(),
                "peak_p_n": c.peak(),
                "peak_db_rel_max": 10.0 * (c.peak() / top).log10(),
                "main_lobe_width_3db_deg": c.main_lobe_width_deg(),
            }));
        }
        let find = |st: Strategy| curves.iter().find(|c| c.strategy == st);
        let gap = match (find(Strategy::Cylindrical), find(Strategy::Planar)) {
            (Some(c), Some(p)) => Some(10.0 * (c.peak() / p.peak()).log10()),
            _ => None,
        };
        let d = yz(focus).norm();
        foci.push(json!({
            "focus_yz_m": focus,
            "arc_radius_m": d,
            "arc_radius_lambda": d / lambda,
            "curves": per,
            "cylindrical_over_planar_peak_db": gap,
        }));
    }
    let file = ctx.main_csv(&table);
    Ok(json!({ "csv": file, "theta_points": thetas.len(), "foci": foci }))
}

fn field_map(ctx: &mut Context, s: &Scenario) -> Result<Value> {
    let fm = &ctx.config.field_map;
    let dc = &ctx.config.design;
    let focus = Vec3::from(dc.focus_xyz_m);
    let design = focused(s, dc.strategy, &focus)?;
    let ap = SampledAperture::new(&design, &s.surface, &s.wave, &s.medium)?;
    let ys = linspace_step(fm.y_min_m, fm.y_max_m, fm.step_m);
    let zs = linspace_step(fm.z_min_m, fm.z_max_m, fm.step_m);
    let points: Vec<(f64, f64)> = ys.iter().flat_map(|&y| zs.iter().map(move |&z| (y, z))).collect();
    let fields = points
        .par_iter()
        .map(|&(y, z)| ap.field_x(&Vec3::new(0.0, y, z)))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&["y_m", "z_m", "re_Ex", "im_Ex"]);
    table.note(design.describe());
    for (&(y, z), e) in points.iter().zip(&fields) {
        table.push(row![y, z, e.re, e.im]);
    }
    let peak = argmax(&fields.iter().map(|e| e.norm_sqr()).collect::<Vec<_>>());
    let file = ctx.main_csv(&table);
    Ok(json!({
        "csv": file,
        "strategy": dc.strategy,
        "focus_xyz_m": vec_json(&focus),
        "points": points.len(),
        "peak_yz_m": [points[peak].0, points[peak].1],
        "peak_abs_ex_v_per_m": fields[peak].norm(),
    }))
}

fn capacity_table(ctx: &mut Context, s: &Scenario) -> Result<Value> {
    let cfg = &ctx.config.capacity;
    let rx = s.receiver.clone();
    let center = rx.center();
    let reference = power_at(s, &focused(s, Strategy::Planar, &center)?, &rx)?;
    let powers = cfg
        .strategies
        .iter()
        .map(|&st| Ok((st, power_at(s, &focused(s, st, &center)?, &rx)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&["strategy", "snr_db", "noise_power_w", "received_power_w", "capacity_bits"]);
    table.note(format!(
        "snr_db is the planar-design received power {reference:.16e} W over the noise power"
    ));
    for &(st, p) in &powers {
        for &snr in &cfg.snr_db {
            let n = reference / crate::config::db_to_linear(snr);
            table.push(row![st, snr, n, p, capacity(p, n)?]);
        }
    }
    let per: Vec<Value> = powers
        .iter()
        .map(|&(st, p)| {
            json!({
                "strategy": st,
                "received_power_w": p,
                "gain_over_planar_db": 10.0 * (p / reference).log10(),
            })
        })
        .collect();
    let file = ctx.main_csv(&table);
    Ok(json!({
        "csv": file,
        "receiver_center_xyz_m": vec_json(&center),
        "reference_power_w": reference,
        "strategies": per,
    }))
}

/// The polar location scan of the `[scan]` section, with the template array
/// at attitude zero.
pub fn location_setup(config: &ExperimentConfig, s: &Scenario) -> Result<ScanSetup> {
    let sc = &config.scan;
    let lambda = s.medium.wavelength();
    let ds: Vec<f64> = linspace_step(sc.d_min_lambda, sc.d_max_lambda, sc.d_step_lambda)
        .into_iter()
        .map(|d| d * lambda)
        .collect();
    let psis: Vec<f64> = linspace_step(sc.psi_min_deg, sc.psi_max_deg, sc.psi_step_deg)
        .into_iter()
        .map(f64::to_radians)
        .collect();
    let grid = ScanGrid::arc(ds, psis)?;
    ScanSetup::new(
        grid,
        sc.strategy,
        s.receiver.rotated_to(0.0),
        s.wave,
        s.medium,
        s.aperture,
        s.surface.clone(),
    )
}

/// True position of the `[scan]` section.
pub fn location_truth(config: &ExperimentConfig, s: &Scenario) -> Vec3 {
    let sc = &config.scan;
    let d = sc.truth_d_lambda * s.medium.wavelength();
    let (sn, cs) = sc.truth_psi_deg.to_radians().sin_cos();
    Vec3::new(0.0, d * cs, d * sn)
}

fn sense_location(ctx: &mut Context, s: &Scenario) -> Result<Value> {
    let sc = &ctx.config.scan;
    let setup = location_setup(ctx.config, s)?;
    let truth = location_truth(ctx.config, s);
    let sigma = match sc.snr_db {
        Some(snr) => sigma_for_snr(reference_signal_power(&setup, &truth)?, snr)?,
        None => 0.0,
    };
    let meas = simulate_scan(&setup.receiver_at(&truth), &setup, sigma, ctx.seed)?;
    let est = fs_estimate(&meas, setup.grid())?;
    let scores = fs_scores(&meas);
    let lambda = s.medium.wavelength();
    let mut table = Table::new(&["d_lambda", "psi_deg", "y_m", "z_m", "fs_score"]);
    let d_grid = linspace_step(sc.d_min_lambda, sc.d_max_lambda, sc.d_step_lambda);
    let psi_grid = linspace_step(sc.psi_min_deg, sc.psi_max_deg, sc.psi_step_deg);
    for (t, p) in setup.grid().candidates().iter().enumerate() {
        let (i, j) = (t / psi_grid.len(), t % psi_grid.len());
        table.push(row![d_grid[i], psi_grid[j], p.y, p.z, scores[t]]);
    }
    let (ei, ej) = (est.index / psi_grid.len(), est.index % psi_grid.len());
    let file = ctx.main_csv(&table);
    Ok(json!({
        "csv": file,
        "strategy": sc.strategy,
        "grid": {
            "d_lambda": [sc.d_min_lambda, sc.d_max_lambda, sc.d_step_lambda],
            "psi_deg": [sc.psi_min_deg, sc.psi_max_deg, sc.psi_step_deg],
            "candidates": setup.grid().len(),
        },
        "truth": { "d_lambda": sc.truth_d_lambda, "psi_deg": sc.truth_psi_deg, "xyz_m": vec_json(&truth) },
        "noise_sigma": sigma,
        "estimate": {
            "index": est.index,
            "d_lambda": d_grid[ei],
            "psi_deg": psi_grid[ej],
            "xyz_m": vec_json(&est.position),
            "score": est.score,
            "ties": est.ties,
            "error_m": (est.position - truth).norm(),
        },
        "lambda_m": lambda,
    }))
}

/// Attitude profile of one strategy at one array center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttitudeCurve {
    pub strategy: Strategy,
    pub center_yz_m: [f64; 2],
    pub phis_deg: Vec<f64>,
    pub powers_w: Vec<f64>,
}

impl AttitudeCurve {
    pub fn argmax_deg(&self) -> f64 {
        self.phis_deg[argmax(&self.powers_w)]
    }

    pub fn is_non_increasing(&self) -> bool {
        self.powers_w.windows(2).all(|w| w[1] <= w[0])
    }

    /// `10 log10(P(first phi) / P(last phi))`.
    pub fn dynamic_range_db(&self) -> f64 {
        10.0 * (self.powers_w[0] / self.powers_w[self.powers_w.len() - 1]).log10()
    }
}

pub fn attitude_curve(s: &Scenario, strategy: Strategy, center_yz_m: [f64; 2], phis_deg: &[f64]) -> Result<AttitudeCurve> {
    let rx = s.receiver.moved_to(yz(center_yz_m));
    let phis: Vec<f64> = phis_deg.iter().map(|p| p.to_radians()).collect();
    let profile = attitude_power_profile(&rx, &phis, strategy, &s.wave, &s.medium, &s.aperture, &s.surface)?;
    debug_assert_eq!(dynamic_range_db(&profile)?, 10.0 * (profile[0].power / profile[phis.len() - 1].power).log10());
    Ok(AttitudeCurve {
        strategy,
        center_yz_m,
        phis_deg: phis_deg.to_vec(),
        powers_w: profile.iter().map(|p| p.power).collect(),
    })
}

fn sense_attitude(ctx: &mut Context, s: &Scenario) -> Result<Value> {
    let cfg = &ctx.config.attitude;
    let phis = linspace_step(cfg.phi_min_deg, cfg.phi_max_deg, cfg.phi_step_deg);
    let mut table = Table::new(&["center_y_m", "center_z_m", "strategy", "phi_deg", "power_w", "power_db_rel_first"]);
    let mut profiles = Vec::new();
    for &center in &cfg.centers_yz_m {
        for &st in &cfg.strategies {
            let c = attitude_curve(s, st, center, &phis)?;
            for (phi, p) in c.phis_deg.iter().zip(&c.powers_w) {
                table.push(row![center[0], center[1], st, *phi, *p, 10.0 * (p / c.powers_w[0]).log10()]);
            }
            // Feed the power at the probe attitude back through the inverse
            // profile; this only works where the profile is monotone.
            let probe = attitude_curve(s, st, center, &[cfg.probe_phi_deg])?.powers_w[0];
            let samples: Vec<_> = c
                .phis_deg
                .iter()
                .zip(&c.powers_w)
                .map(|(&phi, &power)| crate::sensing::AttitudeSample { phi, power })
                .collect();
            let (estimate, estimate_error) = match attitude_estimate(probe, &samples) {
                Ok(phi) => (Some(phi), None),
                Err(e) => (None, Some(e.to_string())),
            };
            profiles.push(json!({
                "center_yz_m": center,
                "strategy": st,
                "argmax_phi_deg": c.argmax_deg(),
                "non_increasing": c.is_non_increasing(),
                "dynamic_range_db": c.dynamic_range_db(),
                "probe_phi_deg": cfg.probe_phi_deg,
                "probe_power_w": probe,
                "estimated_phi_deg": estimate,
                "estimate_error": estimate_error,
            }));
        }
    }
    let file = ctx.main_csv(&table);
    Ok(json!({ "csv": file, "phi_points": phis.len(), "profiles": profiles }))
}

/// The square `yz` scan of the `[ml]` section.
pub fn ml_setup(config: &ExperimentConfig, s: &Scenario) -> Result<ScanSetup> {
    let ml = &config.ml;
    let grid = ScanGrid::yz_square(&yz(ml.center_yz_m), ml.grid_n, ml.grid_step_m)?;
    ScanSetup::new(
        grid,
        ml.strategy,
        s.receiver.rotated_to(0.0),
        s.wave,
        s.medium,
        s.aperture,
        s.surface.clone(),
    )
}

fn ml_truth(config: &ExperimentConfig) -> Vec3 {
    yz(config.ml.truth_yz_m.unwrap_or(config.ml.center_yz_m))
}

fn grid_json(config: &ExperimentConfig) -> Value {
    let ml = &config.ml;
    json!({
        "center_yz_m": ml.center_yz_m,
        "n": ml.grid_n,
        "step_m": ml.grid_step_m,
        "strategy": ml.strategy,
    })
}

fn estimate_json(est: &crate::sensing::LocationEstimate, truth: &Vec3) -> Value {
    json!({
        "index": est.index,
        "xyz_m": vec_json(&est.position),
        "score": est.score,
        "ties": est.ties,
        "phase_offset_m": est.phase_offset,
        "error_m": (est.position - truth).norm(),
    })
}

fn sense_ml(ctx: &mut Context, s: &Scenario) -> Result<Value> {
    let setup = ml_setup(ctx.config, s)?;
    let truth = ml_truth(ctx.config);
    let center = yz(ctx.config.ml.center_yz_m);
    let signal = reference_signal_power(&setup, &center)?;
    let sigma = sigma_for_snr(signal, ctx.config.ml.snr_db)?;
    let meas = simulate_scan(&setup.receiver_at(&truth), &setup, sigma, ctx.seed)?;
    let model = MlModel::from_table(setup.candidate_table()?, &s.wave, &s.medium);
    let fs = fs_estimate(&meas, setup.grid())?;
    let ml = ml_estimate(&meas, setup.grid(), &model, s.n_l)?;
    let fs_map = fs_scores(&meas);
    let ml_map = ml_scores(&meas, &model, s.n_l)?;
    let mut table = Table::new(&["y_m", "z_m", "fs_score", "ml_score"]);
    for (t, p) in setup.grid().candidates().iter().enumerate() {
        table.push(row![p.y, p.z, fs_map[t], ml_map[t]]);
    }
    let file = ctx.main_csv(&table);
    Ok(json!({
        "csv": file,
        "grid": grid_json(ctx.config),
        "truth_xyz_m": vec_json(&truth),
        "snr_db": ctx.config.ml.snr_db,
        "reference_signal_power": signal,
        "noise_sigma": sigma,
        "n_l": s.n_l,
        "fs": estimate_json(&fs, &truth),
        "ml": estimate_json(&ml, &truth),
    }))
}

/// In-plane PEB at `truth` for each SNR of `snrs_db`, with the SNR
/// referenced to the planar design at `reference`.
pub fn peb_curve(setup: &ScanSetup, truth: &Vec3, reference: &Vec3, snrs_db: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    let jac = signal_jacobian(&setup.receiver_at(truth), setup)?;
    let signal = reference_signal_power(setup, reference)?;
    snrs_db
        .iter()
        .map(|&snr| {
            let sigma = sigma_for_snr(signal, snr)?;
            let (_, bound) = peb(&jac, sigma, &Axis::IN_PLANE)?;
            Ok((snr, sigma, bound))
        })
        .collect()
}

fn peb_table(ctx: &mut Context, s: &Scenario) -> Result<Value> {
    let setup = ml_setup(ctx.config, s)?;
    let truth = ml_truth(ctx.config);
    let center = yz(ctx.config.ml.center_yz_m);
    let jac = signal_jacobian(&setup.receiver_at(&truth), &setup)?;
    let signal = reference_signal_power(&setup, &center)?;
    let mut table = Table::new(&["snr_db", "sigma", "peb_m", "fisher_yy", "fisher_yz", "fisher_zz"]);
    let mut rows = Vec::new();
    for &snr in &ctx.config.peb.snr_db {
        let sigma = sigma_for_snr(signal, snr)?;
        let (fim, bound) = peb(&jac, sigma, &Axis::IN_PLANE)?;
        let m = fim.matrix();
        table.push(row![snr, sigma, bound, m[(0, 0)], m[(0, 1)], m[(1, 1)]]);
        rows.push(json!({ "snr_db": snr, "sigma": sigma, "peb_m": bound, "fisher_eigenvalues": fim.eigenvalues() }));
    }
    let file = ctx.main_csv(&table);
    Ok(json!({
        "csv": file,
        "grid": grid_json(ctx.config),
        "truth_xyz_m": vec_json(&truth),
        "reference_signal_power": signal,
        "bounds": rows,
    }))
}

fn rmse_table(ctx: &mut Context, s: &Scenario) -> Result<Value> {
    let setup = ml_setup(ctx.config, s)?;
    let center = yz(ctx.config.ml.center_yz_m);
    let signal = reference_signal_power(&setup, &center)?;
    let model = MlModel::from_table(setup.candidate_table()?, &s.wave, &s.medium);
    let cfg = &ctx.config.rmse;
    let report = rmse_harness(&setup, &model, &cfg.snr_db, signal, cfg.trials, s.n_l, ctx.seed)?;
    let bounds = peb_curve(&setup, &center, &center, &cfg.snr_db)?;
    let mut table = Table::new(&["snr_db", "sigma", "trials", "rmse_fs_m", "rmse_ml_m", "peb_center_m"]);
    let mut rows = Vec::new();
    for (r, b) in report.rows.iter().zip(&bounds) {
        table.push(row![r.snr_db, r.sigma, r.trials, r.rmse_fs_m, r.rmse_ml_m, b.2]);
        rows.push(json!({
            "snr_db": r.snr_db,
            "sigma": r.sigma,
            "trials": r.trials,
            "rmse_fs_m": r.rmse_fs_m,
            "rmse_ml_m": r.rmse_ml_m,
            "peb_center_m": b.2,
        }));
    }
    let mut trials = Table::new(&["snr_db", "trial", "truth_index", "fs_index", "ml_index"]);
    for t in &report.records {
        trials.push(row![t.snr_db, t.trial, t.truth_index, t.fs_index, t.ml_index]);
    }
    let file = ctx.main_csv(&table);
    let trial_file = ctx.csv("rmse_trials.csv", &trials);
    Ok(json!({
        "csv": file,
        "trials_csv": trial_file,
        "grid": grid_json(ctx.config),
        "reference_signal_power": signal,
        "n_l": s.n_l,
        "rows": rows,
    }))
}

/// One row of the self-test table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn check(name: &str, value: f64, tolerance: f64) -> Check {
    Check {
        name: name.to_owned(),
        value,
        tolerance,
        passed: value <= tolerance,
    }
}

/// Parsed rows `(x, J0, J1, Y0, Y1)` of [`BESSEL_REFERENCE`].
pub fn bessel_reference() -> Vec<[f64; 5]> {
    BESSEL_REFERENCE
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('x'))
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|f| f.parse().expect("reference table is well formed")).collect();
            [v[0], v[1], v[2], v[3], v[4]]
        })
        .collect()
}

/// Special-function and power-identity checks for the given scenario.
pub fn self_checks(s: &Scenario, focus: &Vec3) -> Result<Vec<Check>> {
    let (zero, one) = (BesselOrder::Zero, BesselOrder::One);
    let mut err = [0.0f64; 4];
    let mut wronskian = 0.0f64;
    for r in bessel_reference() {
        let x = r[0];
        let v = [bessel_j(zero, x)?, bessel_j(one, x)?, bessel_y(zero, x)?, bessel_y(one, x)?];
        for i in 0..4 {
            err[i] = err[i].max((v[i] - r[i + 1]).abs());
        }
        // J1 Y0 - J0 Y1 = 2 / (pi x)
        let w = (v[1] * v[2] - v[0] * v[3]) * std::f64::consts::FRAC_PI_2 * x;
        wronskian = wronskian.max((w - 1.0).abs());
    }
    let mut checks = vec![
        check("bessel_j0_max_abs_error", err[0], 1e-8),
        check("bessel_j1_max_abs_error", err[1], 1e-8),
        check("bessel_y0_max_abs_error", err[2], 1e-8),
        check("bessel_y1_max_abs_error", err[3], 1e-8),
        check("wronskian_max_rel_residual", wronskian, 1e-9),
    ];
    let p_in = crate::design::incident_power(&s.aperture, &s.wave, &s.medium);
    for st in [Strategy::Cylindrical, Strategy::Spherical] {
        let d = focused(s, st, focus)?;
        let rel = (d.reflected_power(&s.aperture) - p_in).abs() / p_in;
        checks.push(check(&format!("{st}_power_conservation_rel"), rel, 1e-12));
    }
    let height = focus.norm();
    let point = FocalPoint::new(0.0, 0.0, height)?;
    let grid = SurfaceGrid::default_for(&s.aperture, &s.medium)?;
    let omega = solid_angle(&grid, &point)?;
    let closed = centered_solid_angle(&s.aperture, height)?;
    checks.push(check("solid_angle_quadrature_rel", (omega - closed).abs() / closed, 1e-3));
    Ok(checks)
}

fn selftest(ctx: &mut Context, s: &Scenario) -> Result<Value> {
    let focus = Vec3::from(ctx.config.design.focus_xyz_m);
    let checks = self_checks(s, &focus)?;
    let (d_min, d_max) = radiating_near_field_bounds(&s.aperture, &s.medium);
    let mut table = Table::new(&["check", "value", "tolerance", "passed"]);
    for c in &checks {
        table.push(row![c.name.as_str(), c.value, c.tolerance, c.passed]);
    }
    let passed = checks.iter().all(|c| c.passed);
    let file = ctx.main_csv(&table);
    let lambda = s.medium.wavelength();
    Ok(json!({
        "csv": file,
        "passed": passed,
        "checks": checks,
        "near_field_lambda": [d_min / lambda, d_max / lambda],
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lobe_width_interpolates() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let v = [0.0, 0.5, 1.0, 0.5, 0.0];
        assert_eq!(main_lobe_width(&xs, &v), Some(2.0));
        let v = [0.2, 0.6, 1.0, 0.8, 0.4];
        let w = main_lobe_width(&xs, &v).unwrap();
        assert!((w - (3.75 - 0.75)).abs() < 1e-12);
        assert_eq!(main_lobe_width(&xs, &[1.0, 0.9, 0.8, 0.7, 0.6]), None);
    }

    #[test]
    fn subcommand_names_round_trip() {
        for c in Subcommand::ALL {
            assert_eq!(c.name().parse::<Subcommand>().unwrap(), c);
        }
        assert!("plot".parse::<Subcommand>().is_err());
    }

    #[test]
    fn bessel_table_has_all_rows() {
        let t = bessel_reference();
        assert_eq!(t.len(), 200);
        assert_eq!(t[0][0], 1e-3);
        assert!((t[199][0] - 1e4).abs() < 1e-9);
    }

    #[test]
    fn csv_header_and_format() {
        let mut cfg = ExperimentConfig::default();
        cfg.aperture.a_m = 0.5;
        cfg.aperture.b_m = 0.5;
        cfg.numerics.samples_per_wavelength = 2.0;
        let r = run(Subcommand::DesignExport, &cfg).unwrap();
        let csv = &r.file("design_export.csv").unwrap().contents;
        let mut lines = csv.lines();
        let first = lines.next().unwrap();
        assert!(first.starts_with(&format!("# risfield {VERSION} subcommand=design-export config_sha256=")));
        assert!(first.contains(&cfg.hash().unwrap()));
        assert!(lines.next().unwrap().starts_with("# design=cylindrical"));
        assert!(lines.next().unwrap().starts_with("# max_tau="));
        assert_eq!(lines.next().unwrap(), "x_m,y_m,tau,beta_rad");
        let data: Vec<&str> = lines.collect();
        assert_eq!(data.len(), 100);
        for field in data[0].split(',') {
            let v: f64 = field.parse().unwrap();
            assert_eq!(format!("{v:.16e}"), field);
        }
        assert!(r.file("design_export.json").is_some());
        assert!(r.summary.get("runtime_s").is_none());
    }
}
