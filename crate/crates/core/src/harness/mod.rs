//! Monte Carlo experiments checking the quantitative statements about
//! stochastic integrals and convolutions at desk scale.
//!
//! Every experiment is a deterministic function of its [`ExperimentConfig`]:
//! replicas run on the rayon pool, results are collected in stream order and
//! reduced in that order.

mod config;
mod experiments;
mod report;
pub mod stats;

pub use config::{EigenPreset, ExperimentConfig, ExperimentId, IntegrandPreset, DEFAULT_SEED, SMOKE_REPLICAS};
pub use report::{Check, ExperimentReport, FittedConstant, Plot, StreamBlock, Table};

use crate::error::{Error, Result};

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    use experiments::*;
    match config.experiment {
        ExperimentId::MomentGrowth => moment_growth::run(config),
        ExperimentId::TailBound => tail_bound::run(config),
        ExperimentId::AxiomGauss => axiom_gauss::run(config),
        ExperimentId::SolutionMapContinuity => solution_map_continuity::run(config),
        ExperimentId::RefinementStability => refinement_stability::run(config),
        ExperimentId::LevyModulus => levy_modulus::run(config),
        ExperimentId::DetconvRatio => detconv_ratio::run(config),
        ExperimentId::EmbeddingChecks => embedding_checks::run(config),
        ExperimentId::ConditionalIncrement => conditional_increment::run(config),
    }
}

/// Runs on a dedicated pool of `threads` workers (all cores when `None`).
pub fn run_experiment_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot build the worker pool: {e}")))?;
    pool.install(|| run_experiment(config))
}
