use super::ReportBuilder;
use crate::besov::levy_ratio;
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::report::{Check, ExperimentReport, Table};
use crate::harness::stats::{mean, quantile};
use crate::stochastic::sample_brownian;

pub(crate) fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ReportBuilder::new(config);
    let ratios = report.replicate("replicas", 0, config.replicas, |spec| {
        levy_ratio(&sample_brownian(config.j, config.d, spec)?)
    })?;
    let (lo, hi) = (config.tol("band_lo"), config.tol("band_hi"));
    let inside = ratios.iter().filter(|&&r| r >= lo && r <= hi).count();

    let mut table = Table::new("distribution", &["probability", "quantile"]);
    for tau in [0.01, 0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975, 0.99] {
        table.push(vec![tau, quantile(&ratios, tau)]);
    }
    report.table(table);
    report.note(format!("mean ratio {:.6}", mean(&ratios)));
    report.check(Check::at_least(
        "replica_count",
        "the Lévy study uses enough independent paths",
        ratios.len() as f64,
        config.tol("min_replicas"),
    ));
    report.check(
        Check::at_least(
            "coverage",
            "sup |W(s + h) - W(s)| / sqrt(2 h log(1/h)) concentrates near 1 (Lévy modulus)",
            inside as f64 / ratios.len() as f64,
            config.tol("coverage"),
        )
        .with_detail(format!("band [{lo}, {hi}]")),
    );
    Ok(report.finish())
}
