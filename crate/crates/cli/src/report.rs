//! Report envelope and output writing.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::plot::Plot;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
    pub all_checks_passed: bool,
    pub checks: Vec<Check>,
    pub result: Value,
}

impl Report {
    pub fn new(command: &str, checks: Vec<Check>, result: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            generated_at: None,
            all_checks_passed: checks.iter().all(|c| c.passed),
            checks,
            result,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// What a command produced, before anything touches the disk.
pub struct Outcome {
    pub report: Report,
    pub csv: Option<String>,
    /// CSV goes to stdout (and the JSON only to `--report-out`) when no CSV path is given.
    pub csv_primary: bool,
    pub plot: Option<Plot>,
    /// Further artifacts written verbatim.
    pub files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outcome {
    pub fn new(report: Report) -> Self {
        Self {
            report,
            csv: None,
            csv_primary: false,
            plot: None,
            files: Vec::new(),
        }
    }
}

fn path_lock(path: &Path) -> Arc<Mutex<()>> {
    static LOCKS: OnceLock<Mutex<HashMap<PathBuf, Arc<Mutex<()>>>>> = OnceLock::new();
    let key = std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf());
    LOCKS
        .get_or_init(Default::default)
        .lock()
        .expect("lock table")
        .entry(key)
        .or_default()
        .clone()
}

/// Writes `contents` to `path`, one writer per path at a time.
pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let lock = path_lock(path);
    let _guard = lock.lock().expect("path lock");
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn unix_time() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Number formatting for CSV cells; non-finite values use the JSON sentinels.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:e}")
    }
}
