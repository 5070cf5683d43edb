use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use soc_lander::harness::{build_report, load_runs, run_grid, CheckStatus, Condition, GridSpec};

#[test]
fn grid_is_deterministic() {
    let spec = GridSpec::default();
    let a = run_grid(&spec, None).unwrap();
    let b = run_grid(&spec, None).unwrap();
    let ra = build_report(&a.runs, &a.failures).unwrap();
    let rb = build_report(&b.runs, &b.failures).unwrap();
    assert_eq!(ra.text, rb.text);
    assert_eq!(ra.csv, rb.csv);
    assert_eq!(ra.runs_csv, rb.runs_csv);
}

#[test]
fn report_ignores_run_order() {
    let result = run_grid(&GridSpec::default(), None).unwrap();
    let reference = build_report(&result.runs, &[]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let mut runs = result.runs.clone();
        runs.shuffle(&mut rng);
        let r = build_report(&runs, &[]).unwrap();
        assert_eq!(r.text, reference.text);
        assert_eq!(r.runs_csv, reference.runs_csv);
    }
}

#[test]
fn report_from_written_traces_matches_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let result = run_grid(&GridSpec::default(), Some(dir.path())).unwrap();
    let direct = build_report(&result.runs, &[]).unwrap();
    let loaded = load_runs(dir.path()).unwrap();
    assert_eq!(loaded.len(), 60);
    let rebuilt = build_report(&loaded, &[]).unwrap();
    assert_eq!(direct.text, rebuilt.text);
    assert_eq!(direct.csv, rebuilt.csv);
}

#[test]
fn default_grid_passes_every_check() {
    let result = run_grid(&GridSpec::default(), None).unwrap();
    assert!(result.failures.is_empty());
    let report = build_report(&result.runs, &[]).unwrap();
    assert_eq!(report.checks.len(), 4);
    for c in &report.checks {
        assert_eq!(c.status, CheckStatus::Pass, "{}: {}", c.name, c.detail);
    }
}

#[test]
fn baseline_only_grid_reports_without_panicking() {
    let spec = GridSpec { conditions: vec![Condition::Baseline], ..GridSpec::default() };
    let result = run_grid(&spec, None).unwrap();
    assert_eq!(result.runs.len(), 6);
    assert!(result.runs.iter().all(|r| r.strategy_changes.is_none()));
    let report = build_report(&result.runs, &[]).unwrap();
    assert!(report.checks.iter().all(|c| c.status != CheckStatus::Pass));
}
