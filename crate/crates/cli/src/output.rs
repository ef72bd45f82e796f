use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

/// Provenance lines written above every table as `# key=value`.
pub fn header(cfg: &RunConfig, extra: &[(&str, String)]) -> Vec<(String, String)> {
    let mut lines = vec![
        ("command".to_string(), cfg.command.name().to_string()),
        (
            "library".to_string(),
            format!("rabi-esqpt {}", env!("CARGO_PKG_VERSION")),
        ),
        ("energy_units".to_string(), "eps = 2E/Omega".to_string()),
        ("omega0".to_string(), num(cfg.omega0)),
        ("ratio".to_string(), num(cfg.ratio)),
        ("quad_tol".to_string(), num(cfg.quad_tol)),
    ];
    lines.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    lines
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Shortest representation that round-trips, so reruns are byte-identical.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &[(String, String)],
    table: &Table,
) -> Result<PathBuf> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    for (k, v) in header {
        writeln!(out, "# {k}={v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, -1.0, 1e-300, 3.371401357e-30, f64::MIN_POSITIVE] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}
