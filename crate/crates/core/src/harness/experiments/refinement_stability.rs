//! Brownian paths under grid refinement: the `B^{1/2}_{Phi2,inf}` norm settles
//! while the Hölder-1/2 seminorm and the `q = 2` Besov norm keep growing.

use super::ReportBuilder;
use crate::besov::{dyadic_besov_norm, holder_seminorm, BesovParams, HolderMode, NormMode, Summability};
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::report::{Check, ExperimentReport, Table};
use crate::harness::stats::{median, relative_drift};
use crate::orlicz::YoungFunction;
use crate::stochastic::sample_brownian;

pub(crate) fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ReportBuilder::new(config);
    let mut sweep = config.j_sweep.clone();
    sweep.sort_unstable();
    sweep.dedup();
    let j_max = *sweep.last().expect("validated sweep");
    let orlicz = BesovParams::sup(config.alpha, config.young)?;
    let l2 = BesovParams::new(config.alpha, Summability::Finite(2.0), YoungFunction::Power(2.0))?;

    let samples = report.replicate("replicas", 0, config.replicas, |spec| {
        let path = sample_brownian(j_max, config.d, spec)?;
        sweep
            .iter()
            .map(|&j| {
                let p = path.subsample(1 << (j_max - j))?;
                Ok([
                    dyadic_besov_norm(&p, &orlicz, NormMode::Fast)?.value,
                    holder_seminorm(&p, config.alpha, HolderMode::DyadicPairs)?,
                    dyadic_besov_norm(&p, &l2, NormMode::Fast)?.value,
                ])
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let medians: Vec<[f64; 3]> = (0..sweep.len())
        .map(|i| [0, 1, 2].map(|k| median(&samples.iter().map(|s| s[i][k]).collect::<Vec<_>>())))
        .collect();
    let mut table = Table::new(
        "refinement",
        &[
            "J",
            "orlicz_norm",
            "holder_seminorm",
            "holder_over_levy",
            "besov_q2_norm",
        ],
    )
    .with_plot("J", &["orlicz_norm", "holder_seminorm", "besov_q2_norm"], false);
    for (&j, m) in sweep.iter().zip(&medians) {
        let levy = (2.0 * std::f64::consts::LN_2 * j as f64).sqrt();
        table.push(vec![j as f64, m[0], m[1], m[1] / levy, m[2]]);
    }
    report.table(table);

    let column = |k: usize| medians.iter().map(|m| m[k]).collect::<Vec<f64>>();
    report.check(Check::at_most(
        "orlicz_drift",
        "the B^(1/2)_(Phi2,inf) norm of Brownian paths is finite: medians stable in J",
        relative_drift(&column(0)),
        config.tol("drift"),
    ));
    let (j0, j1) = (sweep[0] as f64, j_max as f64);
    let last = medians.len() - 1;
    report.check(Check::within(
        "holder_growth",
        "Brownian paths are not 1/2-Hölder: the seminorm grows like sqrt(2 log 2 J)",
        medians[last][1] / medians[0][1] / (j1 / j0).sqrt(),
        config.tol("holder_lo"),
        config.tol("holder_hi"),
    ));
    report.check(Check::within(
        "besov_q2_growth",
        "B^(1/2)_(2,q) with q < inf diverges: the l^2 sum of nearly equal levels grows like J^(1/2)",
        medians[last][2] / medians[0][2] / (j1 / j0).sqrt(),
        config.tol("besov_lo"),
        config.tol("besov_hi"),
    ));
    Ok(report.finish())
}
