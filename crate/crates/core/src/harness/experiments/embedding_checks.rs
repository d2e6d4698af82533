//! Pointwise consequences of Besov-Orlicz membership on simulated paths:
//! the Garsia-Rodemich-Rumsey modulus, the sup-norm bound, the Hölder
//! embedding with a ramp-fitted constant, and the extension constants.

use super::{halves, random_sine_path, ReportBuilder};
use crate::besov::{
    dyadic_besov_norm, extend_reflect, extend_zero, full_besov_norm, grr_zeta, BesovParams, NormMode, SampledPath,
};
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::report::{Check, ExperimentReport, FittedConstant, Table};
use crate::harness::stats::{relative_change, relative_drift};
use crate::orlicz::YoungFunction;
use crate::stochastic::sample_brownian;

/// Hölder embedding exponents `B^{3/4}_{4,inf} -> C^{1/2}`.
const HOLDER_ALPHA: f64 = 0.75;
const HOLDER_P: f64 = 4.0;
const MAX_LISTED: usize = 20;

/// Node pairs `(i, i + s)` with `||f(t_{i+s}) - f(t_i)|| > bound(s)`.
pub(crate) fn violations(path: &SampledPath, bound: impl Fn(usize) -> f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for s in 1..=path.cells() {
        let b = bound(s);
        if crate::besov::max_increment(path, s) > b {
            out.extend(
                (0..path.nodes() - s)
                    .filter(|&i| path.dist(i + s, i) > b)
                    .map(|i| (i, i + s)),
            );
        }
    }
    out
}

/// `max_s max_i ||f(t_{i+s}) - f(t_i)|| / ((s dt)^{alpha - 1/p} |f|_{B^alpha_{p,inf}})`.
fn holder_ratio(path: &SampledPath) -> Result<Option<f64>> {
    let params = BesovParams::sup(HOLDER_ALPHA, YoungFunction::Power(HOLDER_P))?;
    let semi = full_besov_norm(path, &params)?.seminorm;
    if semi == 0.0 {
        return Ok(None);
    }
    let gamma = HOLDER_ALPHA - 1.0 / HOLDER_P;
    let dt = path.dt();
    Ok(Some(
        (1..=path.cells())
            .map(|s| crate::besov::max_increment(path, s) / ((s as f64 * dt).powf(gamma) * semi))
            .fold(0.0, f64::max),
    ))
}

struct Sample {
    grr: Vec<(usize, usize)>,
    sup_ratio: f64,
    holder: [Option<f64>; 2],
    reflect: [f64; 2],
    zero: [f64; 2],
}

pub(crate) fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ReportBuilder::new(config);
    let YoungFunction::ExpPower(beta) = config.young else {
        return Err(Error::Config(format!(
            "embedding_checks needs an exp:<beta> Young function, got {}",
            config.young
        )));
    };
    let (j, alpha) = (config.j, config.alpha);
    if j < 3 {
        return Err(Error::Config("embedding_checks needs J >= 3".into()));
    }
    let cells = 1usize << j;
    let dt = 1.0 / cells as f64;
    let zeta: Vec<f64> = (0..=cells)
        .map(|s| {
            if s == 0 {
                Ok(0.0)
            } else {
                grr_zeta(s as f64 * dt, alpha, beta, 1.0)
            }
        })
        .collect::<Result<_>>()?;
    let slack = 1.0 + config.tol("grr_slack");
    let params = BesovParams::sup(alpha, config.young)?;

    let ramp = SampledPath::from_scalar_fn(0.0, 1.0, j, |t| t)?;
    let c_holder = holder_ratio(&ramp)?.expect("the ramp has a positive seminorm");
    report.constant(
        FittedConstant::new("C_holder", c_holder)
            .with("alpha", HOLDER_ALPHA)
            .with("p", HOLDER_P),
    );

    let samples = report.replicate("replicas", 0, config.replicas, |spec| {
        let path = sample_brownian(j, config.d, spec)?;
        let lambda = full_besov_norm(&path, &params)?.seminorm;
        let grr = violations(&path, |s| lambda * zeta[s] * slack);
        let norm = dyadic_besov_norm(&path, &params, NormMode::Fast)?.value;
        let sup = path.norms().into_iter().fold(0.0, f64::max);
        let smooth = random_sine_path(spec, j, config.d)?;
        let coarse = path.subsample(4)?;
        let extension_ratio = |p: &SampledPath, e: &SampledPath| -> Result<f64> {
            Ok(dyadic_besov_norm(e, &params, NormMode::Fast)?.value
                / dyadic_besov_norm(p, &params, NormMode::Fast)?.value)
        };
        Ok(Sample {
            grr,
            sup_ratio: sup / norm,
            holder: [holder_ratio(&path)?, holder_ratio(&smooth)?],
            reflect: [
                extension_ratio(&path, &extend_reflect(&path)?)?,
                extension_ratio(&coarse, &extend_reflect(&coarse)?)?,
            ],
            zero: [
                extension_ratio(&path, &extend_zero(&path)?)?,
                extension_ratio(&coarse, &extend_zero(&coarse)?)?,
            ],
        })
    })?;

    let total: usize = samples.iter().map(|s| s.grr.len()).sum();
    let listed: Vec<String> = samples
        .iter()
        .enumerate()
        .flat_map(|(r, s)| s.grr.iter().map(move |(a, b)| format!("replica {r}: ({a}, {b})")))
        .take(MAX_LISTED)
        .collect();
    report.check(
        Check::none(
            "grr",
            "||f(a) - f(b)|| <= lambda zeta(|a - b|) at every node pair, lambda the full Phi_beta seminorm",
            total,
        )
        .with_detail(listed.join("; ")),
    );

    let max_of = |xs: &[Sample], f: &dyn Fn(&Sample) -> f64| xs.iter().map(f).fold(0.0, f64::max);
    let (first, second) = halves(&samples);
    let c_sup = max_of(first, &|s| s.sup_ratio);
    let c_sup_second = max_of(second, &|s| s.sup_ratio);
    report.constant(FittedConstant::new("c_sup", c_sup).with("second_half", c_sup_second));
    report.check(
        Check::at_most(
            "sup_norm_bound",
            "||f||_inf <= c ||f||_(B^alpha_(Phi_beta,inf)) with c fitted on the first seed half",
            c_sup_second / c_sup,
            1.0 + config.tol("refit"),
        )
        .with_detail(format!("c = {c_sup:.6}")),
    );

    let holder_violations: usize = samples
        .iter()
        .flat_map(|s| s.holder.iter().flatten())
        .filter(|&&r| r > c_holder * slack)
        .count();
    let worst_holder = samples
        .iter()
        .flat_map(|s| s.holder.iter().flatten().copied())
        .fold(0.0, f64::max);
    report.check(
        Check::none(
            "holder_embedding",
            "||f(a) - f(b)|| <= C |a - b|^(alpha - 1/p) |f|_(B^alpha_(p,inf)) with C fitted on ramps",
            holder_violations,
        )
        .with_detail(format!("largest ratio / C = {:.6}", worst_holder / c_holder)),
    );

    let mut table = Table::new("extension_constants", &["J", "reflect", "zero"]);
    for (name, pick) in [("reflect", 0usize), ("zero", 1usize)] {
        let get = |s: &Sample, k: usize| if pick == 0 { s.reflect[k] } else { s.zero[k] };
        let fine = max_of(&samples, &|s| get(s, 0));
        let coarse = max_of(&samples, &|s| get(s, 1));
        let (a, b) = (max_of(first, &|s| get(s, 0)), max_of(second, &|s| get(s, 0)));
        report.constant(
            FittedConstant::new(&format!("kappa_{name}"), fine)
                .with("coarse_grid", coarse)
                .with("first_half", a)
                .with("second_half", b),
        );
        report.check(Check::at_most(
            &format!("{name}_refit"),
            "the fitted extension constant is stable under a disjoint seed set",
            relative_change(a, b),
            config.tol("refit"),
        ));
        report.check(Check::at_most(
            &format!("{name}_drift"),
            "the fitted extension constant is stable under grid refinement",
            relative_drift(&[fine, coarse]),
            config.tol("drift"),
        ));
    }
    table.push(vec![
        (j - 2) as f64,
        max_of(&samples, &|s| s.reflect[1]),
        max_of(&samples, &|s| s.zero[1]),
    ]);
    table.push(vec![
        j as f64,
        max_of(&samples, &|s| s.reflect[0]),
        max_of(&samples, &|s| s.zero[0]),
    ]);
    report.table(table);
    Ok(report.finish())
}
