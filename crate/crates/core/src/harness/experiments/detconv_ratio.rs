//! `||A u||_{B^alpha_{N,inf}} / ||f||_{B^alpha_{N,inf}}` for `u = int S(t - s) f(s) ds`.

use ndarray::Array2;

use super::{model_for, random_sine_path, ReportBuilder};
use crate::besov::{dyadic_besov_norm, BesovParams, NormMode, SampledPath};
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::report::{Check, ExperimentReport, Table};
use crate::harness::stats::{median, relative_drift};
use crate::orlicz::YoungFunction;
use crate::stochastic::{deterministic_convolution, deterministic_convolution_shifted, sample_brownian, DiagonalModel};

/// For `N = x^p` with `alpha p > 1` the bound needs `f(0+) = 0`.
pub(crate) fn proviso_excludes(young: YoungFunction, alpha: f64, f: &SampledPath) -> bool {
    match young {
        YoungFunction::Power(p) => alpha * p > 1.0 && f.row(0).iter().any(|&v| v != 0.0),
        _ => false,
    }
}

/// `A u` with `A = diag(-lambda_k)`.
pub(crate) fn generator_image(u: &SampledPath, model: &DiagonalModel) -> Result<SampledPath> {
    let mut values: Array2<f64> = u.values().to_owned();
    for (mut col, &l) in values.columns_mut().into_iter().zip(model.eigenvalues()) {
        col.mapv_inplace(|v| -l * v);
    }
    SampledPath::new(u.t0(), u.t1(), values)
}

/// The ratio, or `None` when the proviso excludes `f` or `f = 0`.
pub(crate) fn ratio(f: &SampledPath, model: &DiagonalModel, young: YoungFunction, alpha: f64) -> Result<Option<f64>> {
    if proviso_excludes(young, alpha, f) {
        return Ok(None);
    }
    let params = BesovParams::sup(alpha, young)?;
    let denom = dyadic_besov_norm(f, &params, NormMode::Fast)?.value;
    if denom == 0.0 {
        return Ok(None);
    }
    let u = if model.shift() != 0.0 {
        deterministic_convolution_shifted(f, model)?
    } else {
        deterministic_convolution(f, model)?
    };
    let au = generator_image(&u, model)?;
    Ok(Some(dyadic_besov_norm(&au, &params, NormMode::Fast)?.value / denom))
}

pub(crate) fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ReportBuilder::new(config);
    let model = model_for(config)?;
    let mut sweep = config.j_sweep.clone();
    sweep.sort_unstable();
    sweep.dedup();
    let j_max = *sweep.last().expect("validated sweep");
    let combos: Vec<(YoungFunction, f64)> = config
        .young_grid
        .iter()
        .flat_map(|&y| config.alpha_grid.iter().map(move |&a| (y, a)))
        .collect();

    // ratios[member][combo][J]; even members are smooth, odd ones Brownian.
    let ratios = report.replicate("ensemble", 0, config.replicas, |spec| {
        let rough = spec.stream_id % 2 == 1;
        let fine = if rough {
            sample_brownian(j_max, config.d, spec)?
        } else {
            random_sine_path(spec, j_max, config.d)?
        };
        let paths = sweep
            .iter()
            .map(|&j| fine.subsample(1 << (j_max - j)))
            .collect::<Result<Vec<_>>>()?;
        combos
            .iter()
            .map(|&(young, alpha)| {
                paths
                    .iter()
                    .map(|p| ratio(p, &model, young, alpha))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut columns = vec!["J".to_string()];
    for (young, alpha) in &combos {
        columns.push(format!("max_{young}_a{alpha}"));
        columns.push(format!("median_{young}_a{alpha}"));
    }
    let mut table = Table::new("ratios", &columns);
    let mut maxima = vec![vec![0.0; sweep.len()]; combos.len()];
    let mut medians = vec![vec![0.0; sweep.len()]; combos.len()];
    let mut counts = vec![0usize; combos.len()];
    for c in 0..combos.len() {
        for i in 0..sweep.len() {
            let values: Vec<f64> = ratios.iter().filter_map(|member| member[c][i]).collect();
            counts[c] = values.len();
            maxima[c][i] = values.iter().copied().fold(0.0, f64::max);
            medians[c][i] = if values.is_empty() { 0.0 } else { median(&values) };
        }
    }
    for (i, &j) in sweep.iter().enumerate() {
        let mut row = vec![j as f64];
        for c in 0..combos.len() {
            row.push(maxima[c][i]);
            row.push(medians[c][i]);
        }
        table.push(row);
    }
    report.table(table);

    for (c, (young, alpha)) in combos.iter().enumerate() {
        let tag = format!("{young}_a{alpha}");
        if counts[c] == 0 {
            report.note(format!("{tag}: every ensemble member excluded"));
            continue;
        }
        report.check(
            Check::at_most(
                &format!("drift_{tag}"),
                "the maximal-regularity ratio ||Au|| / ||f|| is bounded uniformly in the grid",
                relative_drift(&maxima[c]),
                config.tol("drift"),
            )
            .with_detail(format!("{} admissible members", counts[c])),
        );
        let last = sweep.len() - 1;
        report.check(Check::at_most(
            &format!("spread_{tag}"),
            "no ensemble member drives the ratio far above the ensemble median",
            maxima[c][last] / medians[c][last],
            config.tol("spread"),
        ));
    }
    Ok(report.finish())
}
