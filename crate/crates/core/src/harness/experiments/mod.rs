use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::config::{ExperimentConfig, IntegrandPreset};
use super::report::{Check, ExperimentReport, FittedConstant, StreamBlock, Table};
use crate::besov::SampledPath;
use crate::error::Result;
use crate::stochastic::{DiagonalModel, Purpose, RngSpec, StepIntegrand};

pub(crate) mod axiom_gauss;
pub(crate) mod conditional_increment;
pub(crate) mod detconv_ratio;
pub(crate) mod embedding_checks;
pub(crate) mod levy_modulus;
pub(crate) mod moment_growth;
pub(crate) mod refinement_stability;
pub(crate) mod solution_map_continuity;
pub(crate) mod tail_bound;

/// Accumulates the pieces of a report; checks are downgraded in smoke runs.
pub(crate) struct ReportBuilder<'a> {
    config: &'a ExperimentConfig,
    started: Instant,
    report: ExperimentReport,
}

impl<'a> ReportBuilder<'a> {
    pub fn new(config: &'a ExperimentConfig) -> Self {
        let report = ExperimentReport {
            experiment: config.experiment,
            config: config.to_pairs().into_iter().collect(),
            smoke: config.smoke(),
            master_seed: config.seed,
            streams: Vec::new(),
            checks: Vec::new(),
            tables: Vec::new(),
            constants: Vec::new(),
            notes: Vec::new(),
            wall_clock_seconds: 0.0,
        };
        Self {
            config,
            started: Instant::now(),
            report,
        }
    }

    pub fn check(&mut self, mut check: Check) {
        check.enforced = !self.config.smoke();
        self.report.checks.push(check);
    }

    pub fn table(&mut self, table: Table) {
        self.report.tables.push(table);
    }

    pub fn constant(&mut self, constant: FittedConstant) {
        self.report.constants.push(constant);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.report.notes.push(note.into());
    }

    pub fn finish(mut self) -> ExperimentReport {
        self.report.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        self.report
    }

    /// Runs `job` on streams `first .. first + count` in parallel and
    /// returns the results in stream order.
    pub fn replicate<T, F>(&mut self, label: &str, first: u64, count: usize, job: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(RngSpec) -> Result<T> + Sync + Send,
    {
        self.report.streams.push(StreamBlock {
            label: label.into(),
            first,
            count: count as u64,
        });
        let seed = self.config.seed;
        (0..count as u64)
            .into_par_iter()
            .map(|r| job(RngSpec::new(seed, first + r)))
            .collect()
    }
}

/// The two disjoint seed halves of a replica table.
pub(crate) fn halves<T>(xs: &[T]) -> (&[T], &[T]) {
    xs.split_at(xs.len() / 2)
}

pub(crate) fn model_for(config: &ExperimentConfig) -> Result<DiagonalModel> {
    config.eigenvalues.model(config.d)
}

pub(crate) fn preset_integrand(
    preset: IntegrandPreset,
    scale: f64,
    j: u32,
    d: usize,
    m: usize,
) -> Result<StepIntegrand> {
    preset.integrand(scale, j, d, m)
}

/// `sum_{n=1}^{8} a_{kn} sin(n pi t)`, `a_{kn} ~ N(0, 1) / n`, drawn from the
/// replica's integrand stream; vanishes at `t = 0`.
pub(crate) fn random_sine_path(spec: RngSpec, j: u32, d: usize) -> Result<SampledPath> {
    const MODES: usize = 8;
    let mut rng = spec.rng(Purpose::Integrand);
    let coeffs: Vec<f64> = (0..d * MODES)
        .map(|i| {
            let z: f64 = rng.sample(StandardNormal);
            z / ((i % MODES) + 1) as f64
        })
        .collect();
    SampledPath::from_fn(0.0, 1.0, j, d, |t, k| {
        (0..MODES)
            .map(|n| coeffs[k * MODES + n] * ((n + 1) as f64 * std::f64::consts::PI * t).sin())
            .sum()
    })
}
