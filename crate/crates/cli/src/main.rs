use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::parser::ValueSource;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

mod manifest;
mod norm;
mod simulate;
mod verify;

#[derive(Parser, Debug)]
#[command(name = "bpl", version, about = "Besov-Orlicz path norms and Monte Carlo checks")]
struct Cli {
    /// Worker threads for the parallel kernels (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, env = "BPL_OUT_DIR", default_value = "bpl-out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute norms of a sampled path stored as CSV.
    Norm(norm::NormArgs),
    /// Simulate a path bundle and write it as CSV.
    Simulate(RunArgs),
    /// Run a verification experiment.
    Verify(verify::VerifyArgs),
    /// Summarise a stored report and re-render its tables.
    Report(verify::ReportArgs),
}

/// Flags shared by the commands that read a flat `key = value` config.
#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Grid resolution: `2^J` cells.
    #[arg(long = "J", id = "J")]
    j: Option<u32>,
    /// `key=value` overrides, applied after the config file.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl RunArgs {
    /// File pairs, then overrides, then flags.
    pub fn pairs(&self) -> Result<Vec<(String, String)>> {
        let mut pairs = Vec::new();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
            let parsed = bpl_core::harness::ExperimentConfig::parse_pairs(&text)
                .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
            pairs.extend(parsed.into_iter().map(|(_, k, v)| (k, v)));
        }
        for raw in &self.overrides {
            let (k, v) = raw
                .split_once('=')
                .ok_or_else(|| anyhow::anyhow!("override `{raw}` is not of the form key=value"))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        if let Some(seed) = self.seed {
            pairs.push(("seed".into(), seed.to_string()));
        }
        if let Some(j) = self.j {
            pairs.push(("J".into(), j.to_string()));
        }
        Ok(pairs)
    }
}

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    let out_explicit = matches.value_source("out") != Some(ValueSource::DefaultValue);
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    let ctx = manifest::Context::new(cli.threads, cli.out.clone(), out_explicit);
    let outcome = match &cli.command {
        Command::Norm(args) => norm::run(args, &ctx),
        Command::Simulate(args) => simulate::run(args, &ctx),
        Command::Verify(args) => verify::run(args, &ctx),
        Command::Report(args) => verify::report(args, &ctx),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
