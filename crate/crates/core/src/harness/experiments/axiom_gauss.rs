//! Explicit Gaussian instance of the `L^p` bound from a joint tail hypothesis.
//!
//! `B = b` is deterministic and `A = |Z| b / sqrt(2 kappa)`, so that
//! `P(A >= x, B <= y) <= P(|Z| >= x sqrt(2 kappa) / y) <= 2 exp(-kappa x^2 / y^2)`.

use rand_distr::{Distribution, StandardNormal};

use super::ReportBuilder;
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::report::{Check, ExperimentReport, Table};
use crate::harness::stats::{gaussian_abs_moment, moment_norm};
use crate::orlicz::{luxemburg_norm, DiscreteMeasure, YoungFunction};
use crate::stochastic::Purpose;

/// `P(|Z| >= u)`.
fn gaussian_two_sided_tail(u: f64) -> f64 {
    statrs::function::erf::erfc(u / std::f64::consts::SQRT_2)
}

pub(crate) fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ReportBuilder::new(config);
    let b = config.scale;
    let factor = config.tol("factor");

    let worst_tail = (0..=400)
        .map(|i| i as f64 * 0.02)
        .map(|u| gaussian_two_sided_tail(u) / (2.0 * (-u * u / 2.0).exp()))
        .fold(0.0, f64::max);
    report.check(Check::at_most(
        "tail_hypothesis",
        "P(|Z| >= u) <= 2 exp(-u^2 / 2), so the constructed pair meets the joint tail hypothesis",
        worst_tail,
        1.0,
    ));

    let z = report.replicate("monte_carlo", 0, config.replicas, |spec| {
        let z: f64 = StandardNormal.sample(&mut spec.rng(Purpose::Increments));
        Ok(z.abs())
    })?;

    let mut table = Table::new(
        "inequality",
        &[
            "p",
            "kappa",
            "norm_A",
            "norm_B",
            "bound",
            "margin",
            "monte_carlo_norm_A",
        ],
    );
    let mut worst = 0.0_f64;
    let mut consistency = 0.0_f64;
    for &p in &config.p_grid {
        let young = YoungFunction::PLog(p);
        let inverse = young.inverse(1.0)?;
        let norm_b = b / inverse;
        let direct = luxemburg_norm(&[b], &DiscreteMeasure::new(vec![1.0])?, young)?;
        if norm_b > 0.0 {
            consistency = consistency.max((direct - norm_b).abs() / norm_b);
        }
        for &kappa in &config.kappa_grid {
            let s = b / (2.0 * kappa).sqrt();
            let norm_a = s * gaussian_abs_moment(p).powf(1.0 / p);
            let bound = factor * p.sqrt() * kappa.powf(-0.5) * norm_b;
            let mc = s * moment_norm(&z, p).0;
            let ratio = if bound > 0.0 { norm_a / bound } else { 0.0 };
            worst = worst.max(ratio);
            let margin = if norm_a > 0.0 { bound / norm_a } else { f64::INFINITY };
            table.push(vec![p, kappa, norm_a, norm_b, bound, margin.min(f64::MAX), mc]);
            report.check(Check::at_most(
                &format!("p{p}_kappa{kappa}"),
                "||A||_p <= 10 sqrt(p) kappa^(-1/2) ||B||_(L^N), N(t) = t^p log^(p/2)(1 + t)",
                norm_a - bound,
                0.0,
            ));
        }
    }
    report.table(table);
    report.check(Check::at_most(
        "luxemburg_consistency",
        "||b||_(L^N) on a probability space equals b / N^(-1)(1)",
        consistency,
        config.tol("consistency"),
    ));
    report.note(format!("largest ||A||_p / bound over the grid: {worst:.6}"));
    Ok(report.finish())
}
