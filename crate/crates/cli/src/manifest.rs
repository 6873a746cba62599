//! Batch runs from a JSON manifest.
//!
//! ```json
//! { "experiments": [
//!     { "kind": "lifespan",
//!       "inputs":  { "snapshot-in": "data/pair.bin" },
//!       "params":  { "c1": 1.0, "p": 2 },
//!       "outputs": { "report-out": "out/lifespan.json" } } ] }
//! ```
//! Paths are relative to the manifest. Rows run in parallel; writes to the
//! same path are serialized.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Parser;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::report::{unix_time, Check, Report};
use crate::{config, execute, Cli, Globals};

pub const KINDS: [&str; 8] = [
    "verify-filters",
    "heat-check",
    "lifespan",
    "lifespan-seq",
    "solve",
    "cont-dep",
    "osgood-demo",
    "calibrate-constants",
];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub experiments: Vec<Experiment>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub kind: String,
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub outputs: BTreeMap<String, String>,
}

fn scalar(v: &Value) -> Result<Option<String>> {
    Ok(match v {
        Value::Bool(true) => Some(String::new()),
        Value::Bool(false) | Value::Null => None,
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => {
            let parts: Result<Vec<String>> = items
                .iter()
                .map(|i| scalar(i)?.ok_or_else(|| anyhow::anyhow!("list entries must be values")))
                .collect();
            Some(parts?.join(","))
        }
        Value::Object(_) => bail!("nested objects are not parameters"),
    })
}

impl Experiment {
    /// The equivalent command line, with paths resolved against `base`.
    pub fn argv(&self, base: &Path) -> Result<Vec<String>> {
        if !KINDS.contains(&self.kind.as_str()) {
            bail!("unknown experiment kind `{}` (expected one of {})", self.kind, KINDS.join(", "));
        }
        let mut args = vec!["mhd".to_string(), self.kind.clone()];
        for (flag, path) in &self.inputs {
            let p = base.join(path);
            if !p.exists() {
                bail!("{}: input `{flag}` = {} does not exist", self.kind, p.display());
            }
            args.push(format!("--{flag}"));
            args.push(p.display().to_string());
        }
        for (flag, value) in &self.params {
            match scalar(value)? {
                Some(v) if v.is_empty() => args.push(format!("--{flag}")),
                Some(v) => {
                    args.push(format!("--{flag}"));
                    args.push(v);
                }
                None => {}
            }
        }
        for (flag, path) in &self.outputs {
            args.push(format!("--{flag}"));
            args.push(base.join(path).display().to_string());
        }
        Ok(args)
    }
}

pub fn load(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
}

pub fn run(path: &Path, config_file: Option<&Path>, g: Globals) -> Result<(Report, String)> {
    let manifest = load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let cfg = match config_file {
        Some(p) => config::load(p)?,
        None => BTreeMap::new(),
    };
    // validate every row before running any of them
    let commands = manifest
        .experiments
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let mut argv = e.argv(base).with_context(|| format!("experiment {i}"))?;
            config::merge(&mut argv, &e.kind, &cfg)?;
            let cli = Cli::try_parse_from(&argv).with_context(|| format!("experiment {i} ({})", e.kind))?;
            Ok(cli.command)
        })
        .collect::<Result<Vec<_>>>()?;
    let outcomes: Vec<Result<(Report, String)>> = commands.par_iter().map(|c| execute(c, g)).collect();

    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (i, (cmd, out)) in commands.iter().zip(outcomes).enumerate() {
        let name = format!("experiment_{i}_{}", cmd.name());
        match out {
            Ok((report, _)) => {
                checks.push(Check::new(&name, report.all_checks_passed, format!("{} checks", report.checks.len())));
                rows.push(serde_json::to_value(&report)?);
            }
            Err(e) => {
                checks.push(Check::new(&name, false, format!("error: {e:#}")));
                rows.push(json!({ "error": format!("{e:#}") }));
            }
        }
    }
    let mut report = Report::new("run", checks, json!({ "manifest": path.display().to_string(), "experiments": rows }));
    if !g.no_timestamp {
        report.generated_at = Some(unix_time());
    }
    let stdout = report.to_json();
    Ok((report, stdout))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_become_argument_lists() {
        let m: Manifest = serde_json::from_str(
            r#"{"experiments":[{"kind":"osgood-demo","params":{"c":2,"rho0":[0.1,0.2],"plot":false},"outputs":{"csv-out":"o.csv"}}]}"#,
        )
        .unwrap();
        let argv = m.experiments[0].argv(Path::new("base")).unwrap();
        assert_eq!(argv[..2], ["mhd", "osgood-demo"]);
        assert!(argv.windows(2).any(|w| w[0] == "--rho0" && w[1] == "0.1,0.2"));
        assert!(argv.windows(2).any(|w| w[0] == "--csv-out" && w[1].ends_with("o.csv")));
        assert!(!argv.contains(&"--plot".to_string()));
        let bad: Manifest = serde_json::from_str(r#"{"experiments":[{"kind":"nope"}]}"#).unwrap();
        assert!(bad.experiments[0].argv(Path::new(".")).is_err());
    }
}
