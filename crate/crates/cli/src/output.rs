//! CSV/JSON emission and the run manifest.

use crate::config::Config;
use crate::{CliError, Format};
use rwrs_core::StatReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

/// SHA-256 of the canonical JSON form of the parsed config (seed resolved).
pub fn config_hash(config: &Config) -> Result<String, CliError> {
    let canonical = serde_json::to_vec(config)?;
    Ok(hex::encode(Sha256::digest(&canonical)))
}

/// 17 significant digits, enough to round-trip an f64.
fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// Writes `<cmd>.csv` (estimates), `<cmd>.verdicts.csv` and/or
/// `<cmd>.json`; returns the paths written.
pub fn write_report(out: &Path, cmd: &str, report: &StatReport, format: Format) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();
    if matches!(format, Format::Csv | Format::Both) {
        let path = out.join(format!("{cmd}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["estimator", "label", "value", "std_err", "sample_size"])?;
        for e in &report.estimates {
            w.write_record([
                e.estimator.clone(),
                e.label.clone(),
                float(e.value),
                opt_float(e.std_err),
                e.sample_size.to_string(),
            ])?;
        }
        w.flush()?;
        written.push(path);

        let path = out.join(format!("{cmd}.verdicts.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["criterion", "passed", "statistic", "lower", "upper", "sample_size"])?;
        for v in &report.verdicts {
            w.write_record([
                v.criterion.clone(),
                v.passed.to_string(),
                float(v.statistic),
                opt_float(v.lower),
                opt_float(v.upper),
                v.sample_size.to_string(),
            ])?;
        }
        w.flush()?;
        written.push(path);
    }
    if matches!(format, Format::Json | Format::Both) {
        let path = out.join(format!("{cmd}.json"));
        std::fs::write(&path, serde_json::to_string_pretty(report)?)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    config_hash: String,
    master_seed: u64,
    outputs: BTreeMap<String, Vec<String>>,
    timings_ms: BTreeMap<String, f64>,
}

/// Records this run in `<out>/manifest.json`. Runs of other subcommands
/// with the same config hash and seed are kept; anything else is replaced.
pub fn write_manifest(
    out: &Path,
    cmd: &str,
    hash: &str,
    seed: u64,
    files: &[PathBuf],
    elapsed: Duration,
) -> Result<(), CliError> {
    let path = out.join("manifest.json");
    let previous: Option<Manifest> = std::fs::read_to_string(&path)
        .ok()
        .and_then(|text| serde_json::from_str(&text).ok())
        .filter(|m: &Manifest| m.config_hash == hash && m.master_seed == seed);
    let mut manifest = previous.unwrap_or_else(|| Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: hash.into(),
        master_seed: seed,
        outputs: BTreeMap::new(),
        timings_ms: BTreeMap::new(),
    });
    manifest.version = env!("CARGO_PKG_VERSION").into();
    manifest
        .outputs
        .insert(cmd.into(), files.iter().map(|p| p.display().to_string()).collect());
    manifest.timings_ms.insert(cmd.into(), elapsed.as_secs_f64() * 1e3);
    std::fs::write(path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}
