use bpl_core::harness::{run_experiment, run_experiment_with_threads, ExperimentConfig, ExperimentId};

fn small(id: ExperimentId, replicas: usize) -> ExperimentConfig {
    let mut config = ExperimentConfig::defaults(id);
    config.set("replicas", &replicas.to_string()).unwrap();
    config
}

#[test]
fn reports_are_pure_functions_of_config_and_seed() {
    let mut config = small(ExperimentId::ConditionalIncrement, 300);
    config.set("J", "6").unwrap();
    let a = run_experiment(&config).unwrap();
    let b = run_experiment_with_threads(&config, Some(1)).unwrap();
    let c = run_experiment_with_threads(&config, Some(3)).unwrap();
    assert_eq!(a.without_timing(), b.without_timing());
    assert_eq!(a.without_timing(), c.without_timing());
    assert_eq!(a.to_json().unwrap().len(), b.to_json().unwrap().len());

    config.set("seed", "99").unwrap();
    let d = run_experiment(&config).unwrap();
    assert_ne!(a.table("moments"), d.table("moments"));
}

#[test]
fn the_stored_config_reconstructs_the_run() {
    let mut config = small(ExperimentId::MomentGrowth, 150);
    config.set("J_sweep", "6,8").unwrap();
    config.set("J", "8").unwrap();
    config.set("tol.flatness", "1.6").unwrap();
    let report = run_experiment(&config).unwrap();
    let text: String = report.config.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    let rebuilt = ExperimentConfig::from_text(&text, None).unwrap();
    assert_eq!(rebuilt, config);
    assert_eq!(
        run_experiment(&rebuilt).unwrap().without_timing(),
        report.without_timing()
    );
}

#[test]
fn every_experiment_runs_in_smoke_mode_and_writes_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    for id in ExperimentId::ALL {
        let replicas = if id == ExperimentId::EmbeddingChecks { 8 } else { 20 };
        let report = run_experiment(&small(id, replicas)).unwrap();
        assert!(report.smoke, "{id}");
        assert!(!report.checks.is_empty(), "{id}");
        assert!(report.checks.iter().all(|c| !c.enforced), "{id}");
        assert!(report.passed(), "{id}: smoke runs never fail");
        assert!(report.checks.iter().all(|c| !c.invariant.is_empty()), "{id}");

        let written = report.write_dir(dir.path().join(id.as_str())).unwrap();
        assert!(written.iter().any(|p| p.ends_with("report.json")));
        assert_eq!(
            written
                .iter()
                .filter(|p| p.extension().is_some_and(|e| e == "csv"))
                .count(),
            report.tables.len()
        );
        let back: bpl_core::harness::ExperimentReport =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(id.as_str()).join("report.json")).unwrap())
                .unwrap();
        assert_eq!(back, report, "{id}");
    }
}

#[test]
fn stream_blocks_are_disjoint() {
    for id in [ExperimentId::TailBound, ExperimentId::SolutionMapContinuity] {
        let report = run_experiment(&small(id, 20)).unwrap();
        let mut blocks: Vec<(u64, u64)> = report.streams.iter().map(|b| (b.first, b.first + b.count)).collect();
        blocks.sort_unstable();
        assert!(blocks.len() >= 2, "{id}");
        assert!(blocks.windows(2).all(|w| w[0].1 <= w[1].0), "{id}: {blocks:?}");
    }
}

#[test]
fn a_zero_integrand_is_reported_exactly() {
    let mut config = small(ExperimentId::ConditionalIncrement, 200);
    config.set("integrand", "zero").unwrap();
    let report = run_experiment(&config).unwrap();
    assert_eq!(report.check("zero_integrand").unwrap().observed, 0.0);
    assert!(report.passed());
}
