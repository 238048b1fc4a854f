//! The `risfield` binary: exit codes, error objects, overrides and output
//! stability across thread counts.

use std::path::Path;
use std::process::{Command, Output};

use risfield::config::parse_config;

const SMALL: &str = r#"
seed = 3

[aperture]
a_m = 0.6
b_m = 0.6

[numerics]
samples_per_wavelength = 3

[receiver]
num_antennas = 8
length_m = 0.4
center_xyz_m = [0.0, 3.0, 3.0]

[design]
focus_xyz_m = [0.0, 3.0, 3.0]

[ml]
center_yz_m = [3.0, 3.0]
grid_n = 5
grid_step_m = 0.01
truth_yz_m = [3.01, 2.99]
snr_db = 10.0
"#;

fn risfield(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_risfield"));
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("RISFIELD_THREADS", n),
        None => cmd.env_remove("RISFIELD_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn selftest_succeeds_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = risfield(&["selftest", "--out", out_dir.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = stdout_json(&out);
    assert_eq!(v["result"]["passed"], true);
    assert!(out_dir.join("selftest.csv").is_file());
    assert!(out_dir.join("selftest.json").is_file());
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = risfield(&["plot"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_reports_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[medium]\nwavelength_m = -0.1\n");
    let out = risfield(&["capacity", "--config", &cfg, "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["error"]["kind"], "config");
    assert!(v["error"]["message"].as_str().unwrap().contains("medium.wavelength_m"));

    let cfg = write_config(dir.path(), "[medium]\nwavelenth_m = 0.1\n");
    let out = risfield(&["capacity", "--config", &cfg], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_json(&out)["error"]["message"].as_str().unwrap().contains("wavelenth_m"));
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = risfield(&["selftest", "--out", "/nonexistent/never"], Some("zero"));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["error"]["kind"], "config");
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = risfield(
        &["sense-ml", "--config", &cfg, "--seed", "99", "--out", out_dir.to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(stdout_json(&out)["seed"], 99);
    let csv = std::fs::read_to_string(out_dir.join("sense_ml.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("seed=99"));

    let too_big = (i64::MAX as u64 + 1).to_string();
    let out = risfield(&["sense-ml", "--config", &cfg, "--seed", &too_big], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dumped_config_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = risfield(&["selftest", "--config", &cfg, "--dump-config"], None);
    assert_eq!(out.status.code(), Some(0));
    let dumped = parse_config(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(dumped, parse_config(SMALL).unwrap());
}

#[test]
fn files_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = dir.path().join(format!("t{threads}"));
        for sub in ["sense-ml", "peb", "capacity"] {
            let out = risfield(&[sub, "--config", &cfg, "--out", out_dir.to_str().unwrap()], Some(threads));
            assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
        }
        outputs.push(out_dir);
    }
    for name in ["sense_ml.csv", "sense_ml.json", "peb.csv", "peb.json", "capacity.csv", "capacity.json"] {
        let a = std::fs::read(outputs[0].join(name)).unwrap();
        let b = std::fs::read(outputs[1].join(name)).unwrap();
        assert!(a == b, "{name} differs between thread counts");
    }
}
