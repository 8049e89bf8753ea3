use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::CliError;

fn read_csv(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        rows.push(rec.iter().map(String::from).collect());
    }
    Ok(rows)
}

fn command_of(dir: &Path) -> Result<String, CliError> {
    let p = dir.join("manifest.toml");
    let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(format!("{}: {e}", p.display())))?;
    let t: toml::Table = toml::from_str(&text).map_err(|e| CliError::io(format!("{}: {e}", p.display())))?;
    Ok(t.get("command")
        .and_then(|v| v.as_str())
        .unwrap_or("unknown")
        .to_string())
}

/// Summary table for run directories (or files inside them). Reads only.
pub fn report(paths: &[PathBuf]) -> Result<String, CliError> {
    let mut out = String::new();
    let mut checks = 0;
    let mut failed = 0;
    for path in paths {
        let dir = if path.is_file() {
            path.parent().map(Path::to_path_buf).unwrap_or_default()
        } else {
            path.clone()
        };
        if !dir.is_dir() {
            return Err(CliError::io(format!("{}: no such run directory", path.display())));
        }
        let command = command_of(&dir)?;
        writeln!(out, "== {} ({command})", dir.display()).unwrap();
        if command == "cycle-scan" {
            writeln!(out, "{:>10} {:>22} {:>22}", "s", "value", "|value-s|").unwrap();
            for r in read_csv(&dir.join("data.csv"))? {
                writeln!(out, "{:>10} {:>22} {:>22}", r[1], r[2], r[3]).unwrap();
            }
        }
        let summary = dir.join("summary.csv");
        if summary.exists() {
            for r in read_csv(&summary)? {
                let status = match r[4].as_str() {
                    "true" => "PASS",
                    "false" => "FAIL",
                    _ => "info",
                };
                if status != "info" {
                    checks += 1;
                    failed += (status == "FAIL") as usize;
                }
                let detail = if status == "info" {
                    String::new()
                } else {
                    format!("target {} tol {}", r[2], r[3])
                };
                writeln!(out, "{status:<5} {:<40} {:>24} {detail}", r[0], r[1]).unwrap();
            }
        }
    }
    writeln!(out, "{checks} checks, {failed} failed").unwrap();
    Ok(out)
}
