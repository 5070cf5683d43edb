//! Per-run metrics computed from a trace alone.

use super::strategy::detect_direction_changes;
use crate::agent::{EpisodeTrace, RunMode, TraceRecord};

/// Steps averaged before a strategy change (150 ms).
pub const PRIOR_WINDOW: usize = 3;
/// Steps averaged after a strategy change (600 ms).
pub const POSTERIOR_WINDOW: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct StrategyChangeEvent {
    pub step: u64,
    pub direction_before: i8,
    pub direction_after: i8,
    pub soc_prior_ll: Option<f64>,
    pub soc_prior_hl: Option<f64>,
    pub soc_post_ll: Option<f64>,
    pub soc_post_hl: Option<f64>,
    pub prior_partial: bool,
    pub post_partial: bool,
}

/// Direction of each step's input.
pub fn input_directions(records: &[TraceRecord]) -> Vec<i8> {
    records.iter().map(|r| r.input.sign()).collect()
}

pub fn detect_strategy_changes(trace: &EpisodeTrace) -> Vec<StrategyChangeEvent> {
    let dirs = input_directions(&trace.records);
    let onsets = detect_direction_changes(&dirs);
    soc_window_stats(&trace.records, &dirs, &onsets)
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v?;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Prior mean over steps `t-3..t-1` and posterior mean over `t+1..t+12`
/// for every onset `t`, with windows truncated at the episode bounds and
/// flagged.
pub fn soc_window_stats(
    records: &[TraceRecord],
    dirs: &[i8],
    onsets: &[usize],
) -> Vec<StrategyChangeEvent> {
    let n = records.len();
    onsets
        .iter()
        .map(|&t| {
            let prior = t.saturating_sub(PRIOR_WINDOW)..t;
            let post = (t + 1).min(n)..(t + 1 + POSTERIOR_WINDOW).min(n);
            let before = dirs[..t].iter().rev().copied().find(|d| *d != 0).unwrap_or(0);
            StrategyChangeEvent {
                step: records[t].step,
                direction_before: before,
                direction_after: dirs[t],
                soc_prior_ll: mean(records[prior.clone()].iter().map(|r| r.ll_soc)),
                soc_prior_hl: mean(records[prior.clone()].iter().map(|r| r.hl_soc)),
                soc_post_ll: mean(records[post.clone()].iter().map(|r| r.ll_soc)),
                soc_post_hl: mean(records[post.clone()].iter().map(|r| r.hl_soc)),
                prior_partial: prior.len() < PRIOR_WINDOW,
                post_partial: post.len() < POSTERIOR_WINDOW,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub condition: String,
    pub level: String,
    pub seed: u64,
    pub steps: usize,
    pub crashes: u32,
    /// Absent for runs without the cognitive layer.
    pub strategy_changes: Option<usize>,
    pub triggers: usize,
    pub mean_ll: Option<f64>,
    pub mean_hl: Option<f64>,
    pub events: Vec<StrategyChangeEvent>,
}

pub fn compute_metrics(trace: &EpisodeTrace) -> RunMetrics {
    let has_ccl = trace.meta.mode == RunMode::Agent;
    let events = if has_ccl { detect_strategy_changes(trace) } else { Vec::new() };
    RunMetrics {
        condition: super::condition_label(&trace.meta),
        level: trace.meta.level.clone(),
        seed: trace.meta.seed,
        steps: trace.records.len(),
        crashes: u32::from(trace.crashed()),
        strategy_changes: has_ccl.then_some(events.len()),
        triggers: trace.records.iter().filter(|r| r.trigger).count(),
        mean_ll: mean(trace.records.iter().map(|r| r.ll_soc)),
        mean_hl: mean(trace.records.iter().map(|r| r.hl_soc)),
        events,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::Input;

    fn records(soc: &[f64]) -> Vec<TraceRecord> {
        soc.iter()
            .enumerate()
            .map(|(i, &s)| TraceRecord {
                step: i as u64,
                x: 0.0,
                y: 0.0,
                input: Input::None,
                ll_soc: Some(s),
                hl_soc: Some(s),
                intention: None,
                trigger: false,
                crashed: false,
            })
            .collect()
    }

    #[test]
    fn partial_prior_window_is_flagged() {
        let r = records(&[0.5; 40]);
        let dirs = vec![0; 40];
        let e = &soc_window_stats(&r, &dirs, &[2])[0];
        assert!(e.prior_partial && !e.post_partial);
        assert_eq!(e.soc_prior_ll, Some(0.5));
    }

    #[test]
    fn constant_series() {
        let r = records(&[0.42; 40]);
        let e = &soc_window_stats(&r, &[0; 40], &[20])[0];
        assert_eq!(e.soc_prior_ll, Some(0.42));
        assert!((e.soc_post_hl.unwrap() - 0.42).abs() < 1e-15);
    }

    #[test]
    fn step_up_at_event() {
        let soc: Vec<f64> = (0..40).map(|i| if i > 20 { 0.9 } else { 0.3 }).collect();
        let e = &soc_window_stats(&records(&soc), &[0; 40], &[20])[0];
        let lift = e.soc_post_ll.unwrap() - e.soc_prior_ll.unwrap();
        assert!((lift - 0.6).abs() < 1e-12);
    }

    #[test]
    fn truncated_posterior() {
        let r = records(&[0.1; 25]);
        let e = &soc_window_stats(&r, &[0; 25], &[20])[0];
        assert!(e.post_partial);
        let last = &soc_window_stats(&r, &[0; 25], &[24])[0];
        assert_eq!(last.soc_post_ll, None);
    }
}
