//! Experiment reports: CSV emission with JSON sidecars, written atomically.
//!
//! CSV is RFC-4180 style (CRLF, comma, minimal quoting) with numbers at 17
//! significant digits, so identical runs produce byte-identical files.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// One result row: scan parameter, value, error estimate.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ReportRow {
    pub parameter: f64,
    pub value: f64,
    pub error: f64,
}

/// Named pass/fail entry of the verification suite.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    /// informational rows report a measurement without gating
    pub informational: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub experiment: String,
    pub config_hash: String,
    /// Canonical (sorted) config the run was produced from; enough to
    /// reproduce the artifact bit-identically.
    pub config_canonical: String,
    pub truncations: BTreeMap<String, String>,
    pub defects: BTreeMap<String, f64>,
    pub runtime_seconds: f64,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub checks: Vec<CheckRow>,
    pub metadata: ReportMetadata,
}

impl ExperimentReport {
    pub fn new(experiment: &str, cfg: &crate::config::Config) -> Self {
        ExperimentReport {
            rows: Vec::new(),
            checks: Vec::new(),
            metadata: ReportMetadata {
                experiment: experiment.to_string(),
                config_hash: cfg.hash(),
                config_canonical: cfg.canonical(),
                ..Default::default()
            },
        }
    }

    pub fn push_row(&mut self, parameter: f64, value: f64, error: f64) {
        assert!(
            parameter.is_finite() && value.is_finite() && error.is_finite(),
            "report rows must be finite: ({parameter}, {value}, {error})"
        );
        self.rows.push(ReportRow { parameter, value, error });
    }

    pub fn push_check(&mut self, name: &str, residual: f64, threshold: f64) {
        self.checks.push(CheckRow {
            name: name.to_string(),
            residual,
            threshold,
            pass: residual.is_finite() && residual <= threshold,
            informational: false,
        });
    }

    pub fn push_info(&mut self, name: &str, value: f64) {
        self.checks.push(CheckRow {
            name: name.to_string(),
            residual: value,
            threshold: f64::INFINITY,
            pass: true,
            informational: true,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// CSV with the scan rows (header `parameter,value,error`).
    pub fn write_rows_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("parameter,value,error\r\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{}\r\n",
                fmt_g17(r.parameter),
                fmt_g17(r.value),
                fmt_g17(r.error)
            ));
        }
        write_atomic(path, out.as_bytes())
    }

    /// CSV with the named checks (header `name,residual,threshold,pass`).
    pub fn write_checks_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("name,residual,threshold,pass\r\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{},{},{}\r\n",
                csv_field(&c.name),
                fmt_g17(c.residual),
                fmt_g17(c.threshold),
                if c.informational {
                    "info"
                } else if c.pass {
                    "pass"
                } else {
                    "fail"
                }
            ));
        }
        write_atomic(path, out.as_bytes())
    }

    /// JSON sidecar with full metadata.
    pub fn write_sidecar(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self)
            .map_err(|e| crate::error::Error::Config(format!("sidecar encode: {e}")))?;
        write_atomic(path, &json)
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Write via a temp file in the same directory plus rename, so readers never
/// observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension(format!(
        "{}.tmp-{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
