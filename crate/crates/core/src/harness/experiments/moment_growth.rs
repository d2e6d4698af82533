//! Growth of `(E ||f.W||^{2p}_{B^alpha_{p,inf}})^{1/(2p)}` in `p`.

use super::{halves, preset_integrand, ReportBuilder};
use crate::besov::{dyadic_besov_norm, BesovParams, NormMode, SampledPath};
use crate::error::Result;
use crate::harness::config::{ExperimentConfig, IntegrandPreset};
use crate::harness::report::{Check, ExperimentReport, FittedConstant, Table};
use crate::harness::stats::{median, moment_norm, relative_change, relative_drift};
use crate::orlicz::YoungFunction;
use crate::stochastic::{feedback_integral, ito_integral, WienerIncrements};

struct Sample {
    norms: Vec<f64>,
    /// `Y_{n,p}` for `n = 1..=J`, per `p`.
    profile: Vec<Vec<f64>>,
    sweep: Vec<f64>,
}

fn max_ratio(samples: &[Sample], p_grid: &[f64], f_norm: f64) -> f64 {
    p_grid
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let norms: Vec<f64> = samples.iter().map(|s| s.norms[k]).collect();
            moment_norm(&norms, 2.0 * p).0 / (p.sqrt() * f_norm)
        })
        .fold(0.0, f64::max)
}

pub(crate) fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ReportBuilder::new(config);
    let j = config.j;
    let j_max = config.j_sweep.iter().copied().chain([j]).max().unwrap_or(j);
    let feedback = config.integrand == IntegrandPreset::Feedback;
    let f = if feedback {
        None
    } else {
        Some(preset_integrand(
            config.integrand,
            config.scale,
            j_max,
            config.d,
            config.m,
        )?)
    };
    let f_norm = match &f {
        Some(f) => f.lq_norm(config.q)?,
        None => config.scale,
    };
    if feedback {
        report.note("feedback integrand: ||f|| is the almost-sure bound `scale`; estimates are reported, the band applies to that bound");
    }

    let params: Vec<BesovParams> = config
        .p_grid
        .iter()
        .map(|&p| BesovParams::sup(config.alpha, YoungFunction::Power(p)))
        .collect::<Result<_>>()?;
    let p_sweep = config.p_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let sweep_params = BesovParams::sup(config.alpha, YoungFunction::Power(p_sweep))?;
    let scale = config.scale;
    let dim = config.d;

    let samples = report.replicate("replicas", 0, config.replicas, |spec| {
        let inc = WienerIncrements::sample(0.0, 1.0, j_max, config.m, spec)?;
        let path: SampledPath = match &f {
            Some(f) => ito_integral(f, &inc)?,
            None => feedback_integral(&inc, |r| scale / ((1.0 + r) * (dim as f64).sqrt()))?.1,
        };
        let coarse = path.subsample(1 << (j_max - j))?;
        let mut norms = Vec::with_capacity(params.len());
        let mut profile = Vec::with_capacity(params.len());
        for p in &params {
            let n = dyadic_besov_norm(&coarse, p, NormMode::Fast)?;
            norms.push(n.value);
            let mut y = vec![0.0; j as usize];
            for level in n.profile.levels.iter().filter(|l| l.exponent < j) {
                y[(j - level.exponent - 1) as usize] = level.term;
            }
            profile.push(y);
        }
        let sweep = config
            .j_sweep
            .iter()
            .map(|&jj| Ok(dyadic_besov_norm(&path.subsample(1 << (j_max - jj))?, &sweep_params, NormMode::Fast)?.value))
            .collect::<Result<_>>()?;
        Ok(Sample { norms, profile, sweep })
    })?;

    if f_norm == 0.0 {
        let nonzero = samples.iter().filter(|s| s.norms.iter().any(|&v| v != 0.0)).count();
        report.check(Check::none(
            "zero_integrand",
            "f = 0 gives f.W = 0 and vanishing estimates",
            nonzero,
        ));
        return Ok(report.finish());
    }

    let mut moments = Table::new("moments", &["p", "m_p", "std_error", "ratio"]).with_plot("p", &["ratio"], false);
    let mut ratios = Vec::new();
    for (k, &p) in config.p_grid.iter().enumerate() {
        let norms: Vec<f64> = samples.iter().map(|s| s.norms[k]).collect();
        let (m, se) = moment_norm(&norms, 2.0 * p);
        let ratio = m / (p.sqrt() * f_norm);
        ratios.push(ratio);
        moments.push(vec![p, m, se, ratio]);
    }
    report.table(moments);

    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    report.check(Check::at_most(
        "flatness",
        "m_p / sqrt(p) is flat in p: moments grow like sqrt(p)",
        hi / lo,
        config.tol("flatness"),
    ));
    report.check(Check::at_most(
        "band",
        "m_p / (sqrt(p) ||f||) stays below the band factor times its value at the smallest p",
        hi / ratios[0],
        config.tol("band"),
    ));

    let (first, second) = halves(&samples);
    let (c1, c2) = (
        max_ratio(first, &config.p_grid, f_norm),
        max_ratio(second, &config.p_grid, f_norm),
    );
    report.constant(
        FittedConstant::new("C_T", hi)
            .with("first_half", c1)
            .with("second_half", c2)
            .with("norm_of_f", f_norm),
    );
    report.check(Check::at_most(
        "refit",
        "the fitted moment constant is stable under a disjoint seed set",
        relative_change(c1, c2),
        config.tol("refit"),
    ));

    let columns: Vec<String> = std::iter::once("n".to_string())
        .chain(config.p_grid.iter().map(|p| format!("mean_Y_p{p}")))
        .collect();
    let mut levels = Table::new("level_profile", &columns);
    for n in 0..j as usize {
        let mut row = vec![(n + 1) as f64];
        for k in 0..config.p_grid.len() {
            row.push(samples.iter().map(|s| s.profile[k][n]).sum::<f64>() / samples.len() as f64);
        }
        levels.push(row);
    }
    report.table(levels);

    if !config.j_sweep.is_empty() {
        let mut sweep = Table::new("refinement", &["J", "median_norm"]).with_plot("J", &["median_norm"], false);
        let medians: Vec<f64> = (0..config.j_sweep.len())
            .map(|i| median(&samples.iter().map(|s| s.sweep[i]).collect::<Vec<_>>()))
            .collect();
        for (&jj, &m) in config.j_sweep.iter().zip(&medians) {
            sweep.push(vec![jj as f64, m]);
        }
        report.table(sweep);
        report.check(
            Check::at_most(
                "sweep_drift",
                "the estimate at the smallest p is stable under grid refinement",
                relative_drift(&medians),
                config.tol("sweep_drift"),
            )
            .with_detail(format!("p = {p_sweep}")),
        );
    }
    Ok(report.finish())
}
