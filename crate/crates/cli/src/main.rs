//! `crofton`: runs one experiment and writes its report.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use crofton_core::reports::{emit, run, Command, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "crofton", version, about = "Monte Carlo integral-geometry experiments")]
struct Cli {
    /// Experiment to run. May also come from the config file.
    #[arg(value_parser = parse_command)]
    command: Option<Command>,

    /// `key = value` file applied before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo sample count; 0 uses the command default.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Worker threads, 0 for all cores. 1 is the bitwise reference mode.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long = "tau-grid")]
    tau_grid: Option<usize>,
    #[arg(long)]
    degree: Option<u32>,
    /// Use the complex interleaved family.
    #[arg(long)]
    complex: bool,
    /// Structure-test tolerance; 0 picks a default from the sample size.
    #[arg(long)]
    tol: Option<f64>,
    /// Polyline or curve file, depending on the command.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `csv` or `json`.
    #[arg(long)]
    format: Option<String>,
    /// Exit nonzero when an optimizer fails to converge.
    #[arg(long)]
    strict: bool,
}

fn parse_command(s: &str) -> Result<Command, String> {
    s.parse().map_err(|e: crofton_core::Error| e.to_string())
}

impl Cli {
    fn config(&self) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            config.apply_text(&text)?;
        }
        if let Some(command) = self.command {
            config.command = command;
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let overrides = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("samples", self.samples.map(|v| v.to_string())),
            ("restarts", self.restarts.map(|v| v.to_string())),
            ("threads", self.threads.map(|v| v.to_string())),
            ("n", self.n.map(|v| v.to_string())),
            ("k", self.k.map(|v| v.to_string())),
            ("l", self.l.map(|v| v.to_string())),
            ("m", self.m.map(|v| v.to_string())),
            ("p", self.p.map(|v| v.to_string())),
            ("q", self.q.map(|v| v.to_string())),
            ("tau-grid", self.tau_grid.map(|v| v.to_string())),
            ("degree", self.degree.map(|v| v.to_string())),
            ("complex", self.complex.then(|| "true".to_string())),
            ("tol", self.tol.map(|v| v.to_string())),
            ("input", path(&self.input)),
            ("out", path(&self.out)),
            ("format", self.format.clone()),
            ("strict", self.strict.then(|| "true".to_string())),
        ];
        for (key, value) in overrides {
            if let Some(value) = value {
                config.set(key, &value)?;
            }
        }
        if self.command.is_none() && self.config.is_none() {
            anyhow::bail!("no command given; pass one of: {}", command_list());
        }
        Ok(config)
    }
}

fn command_list() -> String {
    Command::ALL.iter().map(|c| c.name()).collect::<Vec<_>>().join(", ")
}

fn execute(cli: &Cli) -> Result<()> {
    let config = cli.config()?;
    let report = run(&config)?;
    let text = emit(&report, config.format)?;
    match &config.out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing report to {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("crofton: {e:#}");
            ExitCode::FAILURE
        }
    }
}
