use std::path::PathBuf;

use anyhow::{bail, Context as _, Result};
use bpl_core::harness::{run_experiment, ExperimentConfig, ExperimentId, ExperimentReport};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory};

use crate::manifest::Context;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Experiment id, then `key=value` overrides.
    #[arg(value_name = "ID|KEY=VALUE")]
    args: Vec<String>,
    /// Experiment id (alternative to the positional form).
    #[arg(long)]
    experiment: Option<ExperimentId>,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Grid resolution: `2^J` cells.
    #[arg(long = "J", id = "J")]
    j: Option<u32>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// A `report.json` or the directory holding one.
    path: PathBuf,
}

fn usage_error(msg: String) -> ! {
    crate::Cli::command().error(ErrorKind::InvalidValue, msg).exit()
}

/// Resolves defaults < config file < `key=value` overrides < flags.
pub fn resolve(args: &VerifyArgs) -> Result<ExperimentConfig> {
    let mut named = args.experiment;
    let mut overrides = Vec::new();
    for raw in &args.args {
        match raw.split_once('=') {
            Some((k, v)) => overrides.push((format!("argument `{raw}`"), k.trim().to_string(), v.trim().to_string())),
            None => {
                let id = raw
                    .parse::<ExperimentId>()
                    .unwrap_or_else(|e| usage_error(e.to_string()));
                if named.is_some_and(|n| n != id) {
                    usage_error(format!("two experiments named: `{}` and `{id}`", named.unwrap()));
                }
                named = Some(id);
            }
        }
    }

    let mut pairs = Vec::new();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let parsed = ExperimentConfig::parse_pairs(&text).with_context(|| path.display().to_string())?;
        pairs.extend(
            parsed
                .into_iter()
                .map(|(line, k, v)| (format!("{} line {line}", path.display()), k, v)),
        );
    }
    pairs.extend(overrides);
    for (flag, value) in [
        ("seed", args.seed.map(|v| v.to_string())),
        ("replicas", args.replicas.map(|v| v.to_string())),
        ("J", args.j.map(|v| v.to_string())),
    ] {
        if let Some(value) = value {
            pairs.push((format!("flag --{flag}"), flag.to_string(), value));
        }
    }

    for (origin, _, value) in pairs.iter().filter(|(_, k, _)| k == "experiment") {
        let id: ExperimentId = value.parse().with_context(|| origin.clone())?;
        match named {
            Some(n) if n != id => bail!("{origin} names `{id}` but `{n}` was requested"),
            _ => named = Some(id),
        }
    }
    let Some(id) = named else {
        usage_error(format!(
            "no experiment given; known: {}",
            ExperimentId::ALL
                .iter()
                .map(|e| e.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        ));
    };

    let mut config = ExperimentConfig::defaults(id);
    for (origin, key, value) in pairs.iter().filter(|(_, k, _)| k != "experiment") {
        config.set(key, value).with_context(|| origin.clone())?;
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(config: &ExperimentConfig, ctx: &Context) -> PathBuf {
    let base = match (&config.out_dir, ctx.out_explicit) {
        (Some(dir), false) => dir.clone(),
        _ => ctx.out.clone(),
    };
    base.join(config.experiment.as_str())
}

fn print_outcome(report: &ExperimentReport, dir: &std::path::Path) {
    print!("{}", report.summary());
    for note in &report.notes {
        println!("note: {note}");
    }
    let warned = report.checks.iter().filter(|c| !c.enforced && !c.passed).count();
    let failed = report.checks.iter().filter(|c| c.enforced && !c.passed).count();
    println!(
        "{} {}: {} checks, {failed} failed, {warned} warnings{}; {:.1} s; {}",
        if report.passed() { "PASS" } else { "FAIL" },
        report.experiment,
        report.checks.len(),
        if report.smoke {
            " (smoke run, checks not enforced)"
        } else {
            ""
        },
        report.wall_clock_seconds,
        dir.display()
    );
}

pub fn run(args: &VerifyArgs, ctx: &Context) -> Result<bool> {
    let config = resolve(args)?;
    let report = run_experiment(&config)?;
    let dir = out_dir(&config, ctx);
    let written = report
        .write_dir(&dir)
        .with_context(|| format!("writing {}", dir.display()))?;
    ctx.write_manifest(&dir, "verify", &report.config, Some(config.seed), &written)?;
    print_outcome(&report, &dir);
    Ok(report.passed())
}

pub fn report(args: &ReportArgs, ctx: &Context) -> Result<bool> {
    let file = if args.path.is_dir() {
        args.path.join("report.json")
    } else {
        args.path.clone()
    };
    let text = std::fs::read_to_string(&file).with_context(|| format!("cannot read {}", file.display()))?;
    let report: ExperimentReport =
        serde_json::from_str(&text).with_context(|| format!("{} is not a report", file.display()))?;
    let dir = ctx.out.join(report.experiment.as_str());
    let written = report
        .write_dir(&dir)
        .with_context(|| format!("writing {}", dir.display()))?;
    ctx.write_manifest(&dir, "report", &report.config, Some(report.master_seed), &written)?;
    print_outcome(&report, &dir);
    Ok(report.passed())
}
