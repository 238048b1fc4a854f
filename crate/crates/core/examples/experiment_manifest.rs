//! Runs a subcommand from a TOML manifest and writes its CSV and JSON files,
//! the same path the `risfield` binary takes.
//!
//! Run with `cargo run --example experiment_manifest -- [out-dir]`.

use risfield::config::parse_config;
use risfield::experiments::{run, Subcommand};

const MANIFEST: &str = r#"
seed = 7

[aperture]
a_m = 1.0
b_m = 1.0

[numerics]
samples_per_wavelength = 4

[capacity]
snr_db = [0.0, 10.0, 20.0]
"#;

fn main() -> risfield::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "risfield-example-out".into());
    let config = parse_config(MANIFEST)?;
    let report = run(Subcommand::Capacity, &config)?;
    for path in report.write_to(out.as_ref())? {
        println!("wrote {}", path.display());
    }
    println!("{}", serde_json::to_string_pretty(&report.summary["result"])?);
    Ok(())
}
