use std::sync::Arc;

use soc_lander::agent::{run_episode, AgentConfig, EpisodeTrace, Outcome};
use soc_lander::environment::Level;

fn open_level(zone: &str) -> Arc<Level> {
    let text = format!(
        "level t width 400 height 400\nborder 400 0 400\nborder 0 0 400\n{zone}\nspawn 200 396\n"
    );
    Arc::new(Level::parse(&text).unwrap())
}

fn ll(trace: &EpisodeTrace, i: usize) -> f64 {
    trace.records[i].ll_soc.unwrap()
}

fn entry_index(trace: &EpisodeTrace, y_top: f64) -> usize {
    trace.records.iter().position(|r| r.y <= y_top).unwrap()
}

fn configs() -> [AgentConfig; 2] {
    [AgentConfig::baseline(0), AgentConfig::full(0.5, 0.5, 0)]
}

#[test]
fn medium_hidden_drift_lowers_ll_soc() {
    for cfg in configs() {
        let trace = run_episode(open_level("zone hidden_medium 300 200 0.7"), &cfg).unwrap();
        let e = entry_index(&trace, 300.0);
        let pre = ll(&trace, e - 1);
        let min = (e..e + 40).map(|i| ll(&trace, i)).fold(1.0, f64::min);
        assert!(pre - min > 0.05, "pre {pre} min {min}");
    }
}

#[test]
fn light_hidden_drift_recovers_within_forty_steps() {
    for cfg in configs() {
        let trace = run_episode(open_level("zone hidden_light 300 200 0.3"), &cfg).unwrap();
        let e = entry_index(&trace, 300.0);
        let pre = ll(&trace, e - 1);
        let min = (e..e + 40).map(|i| ll(&trace, i)).fold(1.0, f64::min);
        assert!(min < pre);
        assert!(ll(&trace, e + 40) > pre - 0.02, "not recovered: {}", ll(&trace, e + 40));
    }
}

#[test]
fn compensation_cancels_a_steady_drift() {
    for drift in [0.3, -0.3, 0.7, -0.7] {
        let trace = run_episode(
            open_level(&format!("zone hidden_medium 300 100 {drift}")),
            &AgentConfig::baseline(0),
        )
        .unwrap();
        let e = entry_index(&trace, 300.0);
        let a = &trace.records[e + 60];
        let b = &trace.records[e + 300];
        let net = (b.x - a.x) / 240.0;
        assert!(net.abs() < 0.02, "drift {drift}: net {net} per step");
        let start_x = trace.records[e].x;
        let worst = trace.records[e..e + 300]
            .iter()
            .map(|r| (r.x - start_x).abs())
            .fold(0.0, f64::max);
        assert!(worst < 5.0, "drift {drift}: excursion {worst}");
    }
}

#[test]
fn lands_when_the_corridor_shifts_right() {
    let text = "level r width 400 height 400\nborder 400 0 400\nborder 200 300 400\nborder 0 300 400\nspawn 200 396\n";
    let level = Arc::new(Level::parse(text).unwrap());
    for cfg in configs() {
        let trace = run_episode(level.clone(), &cfg).unwrap();
        assert_eq!(trace.meta.outcome, Outcome::Landed, "{:?}", cfg.mode());
        let last = trace.records.last().unwrap();
        assert!(last.x > 300.0 && last.x < 400.0);
    }
}
