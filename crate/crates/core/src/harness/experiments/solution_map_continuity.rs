//! Continuity of `f -> u_f = S<>f` along a perturbation ladder `f_n = f + 2^-n g`.

use ndarray::Array3;

use super::{halves, model_for, preset_integrand, ReportBuilder};
use crate::besov::{dyadic_besov_norm, BesovParams, NormMode};
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::report::{Check, ExperimentReport, FittedConstant, Table};
use crate::harness::stats::{inversions, median, median_std_error, quantile, relative_change};
use crate::stochastic::{stochastic_convolution, StepIntegrand, WienerIncrements};

/// `g(t) = cos(2 pi t) diag((-1)^k) / sqrt(r)`: `sup_t ||g(t)||_gamma = 1`.
fn perturbation(j: u32, d: usize, m: usize) -> Result<StepIntegrand> {
    let r = d.min(m);
    let cells = 1usize << j;
    let blocks = Array3::from_shape_fn((cells, d, m), |(i, k, l)| {
        if k == l && k < r {
            let t = i as f64 / cells as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * (2.0 * std::f64::consts::PI * t).cos() / (r as f64).sqrt()
        } else {
            0.0
        }
    });
    StepIntegrand::new(0.0, 1.0, blocks)
}

fn quantile_constant(rungs: &[Vec<f64>]) -> f64 {
    rungs
        .iter()
        .enumerate()
        .map(|(n, norms)| quantile(norms, 0.9) * 2f64.powi(n as i32))
        .fold(0.0, f64::max)
}

pub(crate) fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ReportBuilder::new(config);
    let model = model_for(config)?;
    let params = BesovParams::sup(config.alpha, config.young)?;
    let (j, r) = (config.j, config.replicas);
    let f = preset_integrand(config.integrand, config.scale, j, config.d, config.m)?;
    let g = perturbation(j, config.d, config.m)?;

    // The same-integrand rung: u_f - u_f through the linear map is exactly 0.
    let zero = f.try_sub(&f)?;
    let inc = WienerIncrements::sample(0.0, 1.0, j, config.m, crate::stochastic::RngSpec::new(config.seed, 0))?;
    let u0 = stochastic_convolution(&zero, &model, &inc)?;
    report.check(Check::none(
        "exact_zero_rung",
        "f_n = f gives u_(f_n) - u_f = 0 exactly",
        u0.values().iter().filter(|&&v| v != 0.0).count(),
    ));

    let mut rungs: Vec<Vec<f64>> = Vec::new();
    let mut sizes = Vec::new();
    for n in 0..=config.rungs {
        let step = 2f64.powi(-(n as i32));
        let diff = f.try_add(&g.scaled(step))?.try_sub(&f)?;
        sizes.push(diff.sup_norm());
        let first = n as u64 * r as u64;
        let norms = report.replicate(&format!("rung_{n}"), first, r, |spec| {
            let inc = WienerIncrements::sample(0.0, 1.0, j, config.m, spec)?;
            let u = stochastic_convolution(&diff, &model, &inc)?;
            Ok(dyadic_besov_norm(&u, &params, NormMode::Fast)?.value)
        })?;
        rungs.push(norms);
    }

    let medians: Vec<f64> = rungs.iter().map(|x| median(x)).collect();
    let q90: Vec<f64> = rungs.iter().map(|x| quantile(x, 0.9)).collect();
    let mut table = Table::new(
        "ladder",
        &["n", "perturbation_size", "median", "median_std_error", "quantile_90"],
    )
    .with_plot("n", &["median", "quantile_90"], true);
    for (n, norms) in rungs.iter().enumerate() {
        table.push(vec![n as f64, sizes[n], medians[n], median_std_error(norms), q90[n]]);
    }
    report.table(table);

    let allowed = config.tol("inversions");
    report.check(Check::at_most(
        "median_monotone",
        "rung medians decrease (one inversion allowed)",
        inversions(&medians) as f64,
        allowed,
    ));
    report.check(Check::at_most(
        "quantile_monotone",
        "rung 0.9-quantiles decrease (one inversion allowed)",
        inversions(&q90) as f64,
        allowed,
    ));
    let halving = medians
        .windows(2)
        .map(|w| (w[1] / w[0] / 0.5 - 1.0).abs())
        .fold(0.0, f64::max);
    report.check(Check::at_most(
        "median_halving",
        "medians halve per rung: u_(f_n) - u_f = u_(f_n - f) is linear in the perturbation",
        halving,
        config.tol("halving"),
    ));

    let split: Vec<(&[f64], &[f64])> = rungs.iter().map(|x| halves(x)).collect();
    let first: Vec<Vec<f64>> = split.iter().map(|(a, _)| a.to_vec()).collect();
    let second: Vec<Vec<f64>> = split.iter().map(|(_, b)| b.to_vec()).collect();
    let (c1, c2) = (quantile_constant(&first), quantile_constant(&second));
    report.constant(
        FittedConstant::new("C_quantile", quantile_constant(&rungs))
            .with("first_half", c1)
            .with("second_half", c2),
    );
    let worst = second
        .iter()
        .enumerate()
        .map(|(n, x)| quantile(x, 0.9) * 2f64.powi(n as i32) / c1)
        .fold(0.0, f64::max);
    report.check(
        Check::at_most(
            "quantile_bound",
            "quantile_n <= C 2^-n with C fitted on the first seed half, checked on the second",
            worst,
            1.0 + config.tol("quantile_slack"),
        )
        .with_detail(format!("C = {c1:.6}")),
    );
    report.check(Check::at_most(
        "refit",
        "the fitted quantile constant is stable under a disjoint seed set",
        relative_change(c1, c2),
        config.tol("refit"),
    ));
    let exchange = first
        .iter()
        .zip(&second)
        .map(|(a, b)| {
            let se = (median_std_error(a).powi(2) + median_std_error(b).powi(2)).sqrt();
            if se > 0.0 {
                (median(a) - median(b)).abs() / se
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    report.check(Check::at_most(
        "seed_exchangeability",
        "medians over disjoint seed halves agree within the declared number of standard errors",
        exchange,
        config.tol("se_multiple"),
    ));
    Ok(report.finish())
}
