use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context as _, Result};
use bpl_core::besov::{
    dyadic_besov_norm, full_besov_norm, gagliardo_seminorm, holder_seminorm, BesovParams, HolderMode, NormMode,
    SampledPath, Summability, EXHAUSTIVE_MAX_CELLS,
};
use bpl_core::YoungFunction;
use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use crate::manifest::Context;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Dyadic `B^alpha_{N,q}` norm.
    Dyadic,
    /// Sup over every grid shift (`q = inf`).
    Full,
    /// Hölder seminorm of order alpha.
    Holder,
    /// Gagliardo `W^{alpha,p}` seminorm.
    Gagliardo,
}

#[derive(Args, Debug)]
pub struct NormArgs {
    /// Path CSV with columns `t,x0,x1,...`.
    csv: PathBuf,
    /// Young function: `power:<p>`, `exp:<beta>`, `plog:<p>` or `phi2`.
    #[arg(long, default_value = "power:2")]
    young: YoungFunction,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Summability index, a number >= 1 or `inf`.
    #[arg(long, default_value = "inf")]
    q: Summability,
    /// `fast` or `exhaustive` level quantities for the dyadic norm.
    #[arg(long, default_value = "fast")]
    mode: NormMode,
    /// Norms to compute.
    #[arg(long = "kind", value_enum, value_delimiter = ',', default_values = ["dyadic"])]
    kinds: Vec<Kind>,
    /// Integrability of the Gagliardo seminorm.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

struct Row {
    kind: &'static str,
    mode: String,
    value: f64,
    lebesgue: Option<f64>,
    seminorm: f64,
    extra: Value,
}

fn compute(path: &SampledPath, args: &NormArgs, kind: Kind) -> Result<Row> {
    let params = BesovParams::new(args.alpha, args.q, args.young)?;
    Ok(match kind {
        Kind::Dyadic => {
            let n = dyadic_besov_norm(path, &params, args.mode)?;
            Row {
                kind: "dyadic",
                mode: args.mode.to_string(),
                value: n.value,
                lebesgue: Some(n.lebesgue),
                seminorm: n.seminorm,
                extra: json!({ "levels": n.profile.levels }),
            }
        }
        Kind::Full => {
            let n = full_besov_norm(path, &params)?;
            Row {
                kind: "full",
                mode: "every_shift".into(),
                value: n.value,
                lebesgue: Some(n.lebesgue),
                seminorm: n.seminorm,
                extra: json!({ "argmax_shift": n.argmax_shift }),
            }
        }
        Kind::Holder => {
            let mode = if path.cells() <= EXHAUSTIVE_MAX_CELLS {
                HolderMode::Exact
            } else {
                HolderMode::DyadicPairs
            };
            let v = holder_seminorm(path, args.alpha, mode)?;
            Row {
                kind: "holder",
                mode: format!("{mode:?}").to_lowercase(),
                value: v,
                lebesgue: None,
                seminorm: v,
                extra: Value::Null,
            }
        }
        Kind::Gagliardo => {
            let v = gagliardo_seminorm(path, args.alpha, args.p)?;
            Row {
                kind: "gagliardo",
                mode: "double_sum".into(),
                value: v,
                lebesgue: None,
                seminorm: v,
                extra: json!({ "p": args.p }),
            }
        }
    })
}

pub fn run(args: &NormArgs, ctx: &Context) -> Result<bool> {
    if args.kinds.is_empty() {
        bail!("no norm requested");
    }
    let path = SampledPath::load_csv(&args.csv).with_context(|| format!("reading {}", args.csv.display()))?;
    let rows = args
        .kinds
        .iter()
        .map(|&k| compute(&path, args, k))
        .collect::<Result<Vec<_>>>()?;

    println!(
        "{} nodes, dim {}, [{}, {}]; N = {}, alpha = {}, q = {}",
        path.nodes(),
        path.dim(),
        path.t0(),
        path.t1(),
        args.young,
        args.alpha,
        args.q
    );
    println!(
        "{:<10} {:<12} {:>22} {:>22} {:>22}",
        "kind", "mode", "value", "lebesgue", "seminorm"
    );
    for r in &rows {
        let leb = r.lebesgue.map_or("-".to_string(), |v| format!("{v:.15e}"));
        println!(
            "{:<10} {:<12} {:>22.15e} {:>22} {:>22.15e}",
            r.kind, r.mode, r.value, leb, r.seminorm
        );
    }
    if let Some(r) = rows.iter().find(|r| r.kind == "dyadic") {
        println!("\nlevel profile (h = 2^m dt):");
        println!("{:>4} {:>14} {:>22} {:>22}", "m", "h", "increment", "term");
        for l in r.extra["levels"].as_array().into_iter().flatten() {
            println!(
                "{:>4} {:>14.6e} {:>22.15e} {:>22.15e}",
                l["exponent"],
                l["h"].as_f64().unwrap_or(f64::NAN),
                l["increment"].as_f64().unwrap_or(f64::NAN),
                l["term"].as_f64().unwrap_or(f64::NAN)
            );
        }
    }

    let json_rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "kind": r.kind,
                "mode": r.mode,
                "value": r.value,
                "lebesgue": r.lebesgue,
                "seminorm": r.seminorm,
                "detail": r.extra,
            })
        })
        .collect();
    let doc = json!({
        "input": args.csv.display().to_string(),
        "young": args.young.to_string(),
        "alpha": args.alpha,
        "q": args.q.to_string(),
        "norms": json_rows,
    });
    std::fs::create_dir_all(&ctx.out).with_context(|| format!("cannot create {}", ctx.out.display()))?;
    let out = ctx.out.join("norm.json");
    std::fs::write(&out, serde_json::to_string_pretty(&doc)? + "\n")?;

    let config: BTreeMap<String, String> = [
        ("csv", args.csv.display().to_string()),
        ("young", args.young.to_string()),
        ("alpha", args.alpha.to_string()),
        ("q", args.q.to_string()),
        ("mode", args.mode.to_string()),
        ("p", args.p.to_string()),
        (
            "kind",
            args.kinds
                .iter()
                .map(|k| k.to_possible_value().expect("plain variant").get_name().to_string())
                .collect::<Vec<_>>()
                .join(","),
        ),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    ctx.write_manifest(&ctx.out, "norm", &config, None, &[out])?;
    Ok(true)
}
