//! Moments of `M(t) - M(a)` against `sqrt(p) ||f||_{L^q} (t - a)^{1/2 - 1/q}`.

use super::{halves, preset_integrand, ReportBuilder};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, IntegrandPreset};
use crate::harness::report::{Check, ExperimentReport, FittedConstant, Table};
use crate::harness::stats::{moment_norm, relative_change};
use crate::stochastic::{ito_integral, WienerIncrements};

const STARTS: [f64; 3] = [0.0, 0.25, 0.5];
const GAPS: [f64; 4] = [1.0 / 16.0, 0.125, 0.25, 0.5];

pub(crate) fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ReportBuilder::new(config);
    if config.integrand == IntegrandPreset::Feedback {
        return Err(Error::Config(
            "conditional_increment needs a deterministic integrand".into(),
        ));
    }
    let j = config.j;
    if j < 4 {
        return Err(Error::Config("conditional_increment needs J >= 4".into()));
    }
    let cells = 1usize << j;
    let f = preset_integrand(config.integrand, config.scale, j, config.d, config.m)?;
    let f_norm = f.lq_norm(config.q)?;
    let node = |t: f64| (t * cells as f64).round() as usize;
    let pairs: Vec<(usize, usize)> = STARTS
        .iter()
        .flat_map(|&a| GAPS.iter().map(move |&g| (a, a + g)))
        .map(|(a, t)| (node(a), node(t)))
        .collect();
    let degenerate = node(0.5);

    let samples = report.replicate("replicas", 0, config.replicas, |spec| {
        let inc = WienerIncrements::sample(0.0, 1.0, j, config.m, spec)?;
        let m = ito_integral(&f, &inc)?;
        let mut out: Vec<f64> = pairs.iter().map(|&(a, t)| m.dist(t, a)).collect();
        out.push(m.dist(degenerate, degenerate));
        Ok(out)
    })?;
    report.check(Check::none(
        "degenerate_pair",
        "a = t gives a zero increment",
        samples.iter().filter(|s| s[pairs.len()] != 0.0).count(),
    ));
    if f_norm == 0.0 {
        let nonzero = samples.iter().filter(|s| s.iter().any(|&v| v != 0.0)).count();
        report.check(Check::none("zero_integrand", "f = 0 gives M = 0", nonzero));
        return Ok(report.finish());
    }

    let exponent = 0.5 - 1.0 / config.q;
    let dt = 1.0 / cells as f64;
    let shape = |k: usize, p: f64| {
        let (a, t) = pairs[k];
        p.sqrt() * f_norm * ((t - a) as f64 * dt).powf(exponent)
    };
    let column = |xs: &[Vec<f64>], k: usize| xs.iter().map(|s| s[k]).collect::<Vec<f64>>();
    let fit_k = |xs: &[Vec<f64>]| {
        let mut k_max = 0.0_f64;
        for &p in &config.p_grid {
            for k in 0..pairs.len() {
                k_max = k_max.max(moment_norm(&column(xs, k), p).0 / shape(k, p));
            }
        }
        k_max
    };

    let mut table = Table::new("moments", &["a", "t", "p", "estimate", "std_error", "ratio_to_shape"]);
    let mut isometry = Table::new("isometry", &["a", "t", "estimate", "std_error", "exact"]);
    let mut worst_z = 0.0_f64;
    for (k, &(a, t)) in pairs.iter().enumerate() {
        let xs = column(&samples, k);
        for &p in &config.p_grid {
            let (est, se) = moment_norm(&xs, p);
            table.push(vec![a as f64 * dt, t as f64 * dt, p, est, se, est / shape(k, p)]);
        }
        // E ||M(t) - M(a)||^2 = sum ||f_i||^2 dt over the cells in [a, t).
        let exact = ((a..t).map(|i| f.hs_norm(i).powi(2)).sum::<f64>() * dt).sqrt();
        let (est, se) = moment_norm(&xs, 2.0);
        isometry.push(vec![a as f64 * dt, t as f64 * dt, est, se, exact]);
        if se > 0.0 {
            worst_z = worst_z.max((est - exact).abs() / se);
        }
    }
    report.table(table);
    report.table(isometry);
    report.check(Check::at_most(
        "isometry",
        "(E||M(t) - M(a)||^2)^(1/2) matches the Itô isometry within the declared standard errors",
        worst_z,
        config.tol("se_multiple"),
    ));

    let (first, second) = halves(&samples);
    let (k1, k2) = (fit_k(first), fit_k(second));
    report.constant(
        FittedConstant::new("K", fit_k(&samples))
            .with("first_half", k1)
            .with("second_half", k2)
            .with("norm_of_f", f_norm),
    );
    report.check(Check::at_most(
        "k_bound",
        "(E||M(t) - M(a)||^p)^(1/p) <= K sqrt(p) ||f||_(L^q) (t - a)^(1/2 - 1/q), K fitted on the first seed half",
        k2 / k1,
        1.0 + config.tol("refit"),
    ));
    report.check(Check::at_most(
        "k_refit",
        "the fitted constant K is stable under a disjoint seed set",
        relative_change(k1, k2),
        config.tol("refit"),
    ));
    Ok(report.finish())
}
