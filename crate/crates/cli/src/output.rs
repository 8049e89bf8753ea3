use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// One CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// A declared check, written to `summary.csv` and read back by `report`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub metric: String,
    pub value: f64,
    /// `None` for quantities reported without a target.
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
}

impl Check {
    pub fn within(metric: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            metric: metric.into(),
            value,
            target: Some(target),
            tolerance: Some(tolerance),
        }
    }

    pub fn info(metric: impl Into<String>, value: f64) -> Self {
        Self {
            metric: metric.into(),
            value,
            target: None,
            tolerance: None,
        }
    }

    pub fn pass(&self) -> Option<bool> {
        match (self.target, self.tolerance) {
            (Some(t), Some(tol)) => Some((self.value - t).abs() <= tol),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

/// Shortest round-trip form; exponent notation outside `[1e-4, 1e15)`.
pub fn f(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn u(x: usize) -> String {
    x.to_string()
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::io(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::io(e.to_string()))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::io(format!("temporary file in {}: {e}", dir.display())))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| CliError::io(format!("writing {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::io(format!("renaming into {}: {}", path.display(), e.error)))?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    /// The only field that differs between repeated runs.
    timestamp: String,
    files: Vec<String>,
    config: &'a ExperimentConfig,
}

/// Writes every table, `summary.csv` when there are checks, then
/// `manifest.toml`. Returns the paths written.
pub fn write_run(
    dir: &Path,
    command: &str,
    config: &ExperimentConfig,
    out: &RunOutput,
) -> Result<Vec<PathBuf>, CliError> {
    // render everything first so a formatting failure leaves no files behind
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    for t in &out.tables {
        files.push((format!("{}.csv", t.name), csv_bytes(&t.header, &t.rows)?));
    }
    if !out.checks.is_empty() {
        let header: Vec<String> = ["metric", "value", "target", "tolerance", "pass"]
            .map(String::from)
            .to_vec();
        let rows: Vec<Vec<String>> = out
            .checks
            .iter()
            .map(|c| {
                vec![
                    c.metric.clone(),
                    f(c.value),
                    c.target.map(f).unwrap_or_default(),
                    c.tolerance.map(f).unwrap_or_default(),
                    c.pass().map(|p| p.to_string()).unwrap_or_default(),
                ]
            })
            .collect();
        files.push(("summary.csv".to_string(), csv_bytes(&header, &rows)?));
    }
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        files: files.iter().map(|(n, _)| n.clone()).collect(),
        config,
    };
    let manifest = toml::to_string(&manifest).map_err(|e| CliError::io(format!("manifest: {e}")))?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for (name, bytes) in &files {
        let p = dir.join(name);
        write_atomic(&p, bytes)?;
        written.push(p);
    }
    let p = dir.join("manifest.toml");
    write_atomic(&p, manifest.as_bytes())?;
    written.push(p);
    Ok(written)
}
