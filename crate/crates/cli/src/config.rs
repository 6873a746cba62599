//! Flat `key = value` configuration merged into the argument list; flags on
//! the command line win.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::CommandFactory;

use crate::Cli;

pub fn parse(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`, got `{raw}`", no + 1);
        };
        let key = k.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            bail!("config line {}: empty key", no + 1);
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse(&text)
}

/// Long flags accepted by `subcommand`, with whether each takes a value.
fn known_flags(subcommand: &str) -> Vec<(String, bool)> {
    let cmd = Cli::command();
    let mut flags: Vec<(String, bool)> = cmd
        .get_arguments()
        .filter_map(|a| a.get_long().map(|l| (l.to_string(), a.get_action().takes_values())))
        .collect();
    if let Some(sub) = cmd.find_subcommand(subcommand) {
        flags.extend(
            sub.get_arguments()
                .filter_map(|a| a.get_long().map(|l| (l.to_string(), a.get_action().takes_values()))),
        );
    }
    flags
}

fn present(args: &[String], flag: &str) -> bool {
    let long = format!("--{flag}");
    let eq = format!("--{flag}=");
    args.iter().any(|a| a == &long || a.starts_with(&eq))
}

/// Appends config entries the subcommand understands and the arguments do not already set.
pub fn merge(args: &mut Vec<String>, subcommand: &str, config: &BTreeMap<String, String>) -> Result<()> {
    let flags = known_flags(subcommand);
    for (key, value) in config {
        let Some((_, takes_value)) = flags.iter().find(|(f, _)| f == key) else {
            continue;
        };
        if key == "config" || present(args, key) {
            continue;
        }
        if *takes_value {
            args.push(format!("--{key}"));
            args.push(value.clone());
        } else {
            match value.as_str() {
                "true" | "1" | "yes" => args.push(format!("--{key}")),
                "false" | "0" | "no" => {}
                other => bail!("config key `{key}` is a switch; got `{other}`"),
            }
        }
    }
    Ok(())
}

/// The value of `--config` in a raw argument list, if any.
pub fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_merges() {
        let cfg = parse("# constants\nc1 = 2.5\n--p=2\nplot = true\nunknown = 3\n").unwrap();
        assert_eq!(cfg["c1"], "2.5");
        let mut args: Vec<String> = ["mhd", "lifespan", "--c1", "4"].iter().map(|s| s.to_string()).collect();
        merge(&mut args, "lifespan", &cfg).unwrap();
        assert_eq!(args.iter().filter(|a| *a == "--c1").count(), 1);
        assert!(args.contains(&"--p".to_string()));
        assert!(args.contains(&"--plot".to_string()));
        assert!(!args.iter().any(|a| a.contains("unknown")));
        assert!(parse("novalue\n").is_err());
    }
}
