//! `mhd`: command-line front end for the analysis and solver toolkit.

mod commands;
mod config;
mod manifest;
mod plot;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::OutputArgs;
use report::{unix_time, write_file, Outcome, Report};

#[derive(Parser, Debug)]
#[command(name = "mhd", version, about = "Littlewood-Paley analysis, lifespan estimates and Picard solves for non-resistive MHD")]
pub struct Cli {
    /// Flat `key = value` file of flag defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Also write an SVG chart next to the report.
    #[arg(long, global = true)]
    plot: bool,
    /// Omit the generation time from reports.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Partition-of-unity, square-sum, orthogonality and reconstruction checks.
    VerifyFilters(commands::VerifyFiltersArgs),
    /// Heat semigroup and Duhamel exactness plus measured smoothing constants.
    HeatCheck(commands::HeatCheckArgs),
    /// Lifespan estimate of a snapshot pair.
    Lifespan(commands::LifespanArgs),
    /// Lifespan along a sequence of data converging to a limit.
    LifespanSeq(commands::LifespanSeqArgs),
    /// Picard solve of the coupled system.
    Solve(commands::SolveArgs),
    /// Continuous dependence on the data.
    ContDep(commands::ContDepArgs),
    /// Osgood comparison bounds against the comparison ODE.
    OsgoodDemo(commands::OsgoodArgs),
    /// Suggested smoothing and transport constants over a seeded corpus.
    CalibrateConstants(commands::CalibrateArgs),
    /// Write a seeded (u0, b0) snapshot.
    GenField(commands::GenFieldArgs),
    /// Run every experiment of a JSON manifest.
    Run {
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct Globals {
    pub plot: bool,
    pub no_timestamp: bool,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyFilters(_) => "verify-filters",
            Command::HeatCheck(_) => "heat-check",
            Command::Lifespan(_) => "lifespan",
            Command::LifespanSeq(_) => "lifespan-seq",
            Command::Solve(_) => "solve",
            Command::ContDep(_) => "cont-dep",
            Command::OsgoodDemo(_) => "osgood-demo",
            Command::CalibrateConstants(_) => "calibrate-constants",
            Command::GenField(_) => "gen-field",
            Command::Run { .. } => "run",
        }
    }

    fn outputs(&self) -> OutputArgs {
        let none = OutputArgs { report_out: None, traces_out: None };
        match self {
            Command::VerifyFilters(a) => a.out.clone(),
            Command::HeatCheck(a) => a.out.clone(),
            Command::Lifespan(a) => a.out.clone(),
            Command::LifespanSeq(a) => a.out.clone(),
            Command::Solve(a) => a.out.clone(),
            Command::ContDep(a) => a.solve.out.clone(),
            Command::OsgoodDemo(a) => a.out.clone(),
            Command::CalibrateConstants(a) => a.out.clone(),
            Command::GenField(_) | Command::Run { .. } => none,
        }
    }
}

fn compute(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::VerifyFilters(a) => commands::verify_filters(a),
        Command::HeatCheck(a) => commands::heat_check(a),
        Command::Lifespan(a) => commands::lifespan(a),
        Command::LifespanSeq(a) => commands::lifespan_seq(a),
        Command::Solve(a) => commands::solve(a),
        Command::ContDep(a) => commands::cont_dep(a),
        Command::OsgoodDemo(a) => commands::osgood_demo(a),
        Command::CalibrateConstants(a) => commands::calibrate(a),
        Command::GenField(a) => commands::gen_field(a),
        Command::Run { .. } => anyhow::bail!("`run` cannot be nested inside a manifest"),
    }
}

/// Runs one command and writes its artifacts; returns the report and what
/// belongs on stdout. Nothing is written when the command fails.
pub fn execute(cmd: &Command, g: Globals) -> Result<(Report, String)> {
    let mut outcome = compute(cmd)?;
    if !g.no_timestamp {
        outcome.report.generated_at = Some(unix_time());
    }
    let out = cmd.outputs();
    let json = outcome.report.to_json();
    let mut stdout = String::new();
    for (path, bytes) in &outcome.files {
        write_file(path, bytes)?;
    }
    let mut csv_on_stdout = false;
    if let Some(csv) = &outcome.csv {
        match &out.traces_out {
            Some(path) => write_file(path, csv.as_bytes())?,
            None if outcome.csv_primary => {
                stdout.push_str(csv);
                csv_on_stdout = true;
            }
            None => {}
        }
    }
    match &out.report_out {
        Some(path) => write_file(path, json.as_bytes())?,
        None if !csv_on_stdout => stdout.push_str(&json),
        None => {}
    }
    if g.plot {
        if let Some(plot) = &outcome.plot {
            let path = out
                .report_out
                .as_ref()
                .or(out.traces_out.as_ref())
                .map(|p| p.with_extension("svg"))
                .unwrap_or_else(|| PathBuf::from(format!("{}.svg", cmd.name())));
            write_file(&path, plot.to_svg().as_bytes())?;
        }
    }
    Ok((outcome.report, stdout))
}

/// Applies `--config` to a raw argument vector.
pub fn with_config(mut args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config::config_path(&args) else {
        return Ok(args);
    };
    let cfg = config::load(std::path::Path::new(&path))?;
    let sub = args
        .iter()
        .skip(1)
        .find(|a| <Cli as clap::CommandFactory>::command().find_subcommand(a.as_str()).is_some())
        .cloned();
    if let Some(sub) = sub {
        config::merge(&mut args, &sub, &cfg)?;
    }
    Ok(args)
}

fn real_main() -> Result<ExitCode> {
    let args = with_config(std::env::args().collect())?;
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let g = Globals {
        plot: cli.plot,
        no_timestamp: cli.no_timestamp,
    };
    let (report, stdout) = match &cli.command {
        Command::Run { manifest } => manifest::run(manifest, cli.config.as_deref(), g)?,
        cmd => execute(cmd, g)?,
    };
    print!("{stdout}");
    Ok(if report.all_checks_passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
