use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::experiment::ConvergenceReport;

/// Writes `report.json`, `errors.csv`, `trajectories.csv` and `MANIFEST` into `dir`.
///
/// Only the formats listed in the report's configuration are written; the
/// MANIFEST always is. Returns the paths written.
pub fn emit_report(report: &ConvergenceReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let formats = &report.config.output.formats;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    if formats.iter().any(|f| f == "json") {
        put("report.json", serde_json::to_string_pretty(report)? + "\n")?;
    }
    if formats.iter().any(|f| f == "csv") {
        put("errors.csv", errors_csv(report))?;
        put("trajectories.csv", trajectories_csv(report))?;
    }
    put("MANIFEST", manifest(report))?;
    Ok(written)
}

/// `N,mean,stderr,pde_ref,rel_error,observable_id`.
pub fn errors_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("N,mean,stderr,pde_ref,rel_error,observable_id\n");
    for r in &report.errors {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.scale,
            r.mean,
            r.stderr,
            r.pde_ref,
            r.rel_error,
            quote(&r.observable_id)
        );
    }
    out
}

pub fn trajectories_csv(report: &ConvergenceReport) -> String {
    let mut out =
        String::from("N,replica,time,observable_id,value,total_alive,jumps,births,deaths,dynkin_residual\n");
    for r in &report.trajectories {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.scale,
            r.replica,
            r.time,
            quote(&r.observable_id),
            r.value,
            r.total_alive,
            r.jumps,
            r.births,
            r.deaths,
            r.dynkin_residual
        );
    }
    out
}

/// Quotes a CSV field when it contains a separator.
pub fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn manifest(report: &ConvergenceReport) -> String {
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut m = String::new();
    let _ = writeln!(m, "config_sha256 = \"{}\"", report.config_hash);
    let _ = writeln!(m, "root_seed = {}", report.root_seed);
    if let Some(seed) = report.sigma.as_ref().and_then(|s| s.seed) {
        let _ = writeln!(m, "sigma_seed = {seed}");
    }
    let _ = writeln!(m, "scales = {:?}", report.config.dynamics.scales);
    let counts: Vec<usize> = (0..report.config.dynamics.scales.len())
        .map(|k| report.config.dynamics.replicas_at(k))
        .collect();
    let _ = writeln!(m, "replicas = {counts:?}");
    let _ = writeln!(m, "fixed_cloud = {}", report.fixed_cloud);
    let _ = writeln!(m, "crate_version = \"{}\"", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "complete = {}", report.complete);
    if let Some(f) = &report.failure {
        let _ = writeln!(m, "failure = {:?}", f);
    }
    let _ = writeln!(m, "created_unix = {created}");
    m
}
