//! Experiment grid, metric extraction and reports.

mod grid;
mod metrics;
mod report;
mod strategy;

pub use grid::{
    load_runs, run_grid, run_name, traces_dir, Condition, GridResult, GridSpec, RunFailure, GRID_K,
    GRID_THRESHOLDS,
};
pub use metrics::{
    compute_metrics, detect_strategy_changes, input_directions, soc_window_stats, RunMetrics,
    StrategyChangeEvent, POSTERIOR_WINDOW, PRIOR_WINDOW,
};
pub use report::{
    aggregate, build_report, check_balanced_k, check_hl_over_ll, check_lift, check_monotonicity,
    run_checks, CheckResult, CheckStatus, ConditionAggregate, Report, LIFT_MAJORITY,
};
pub use strategy::{brute_force_direction_changes, detect_direction_changes, PERSISTENCE};

use crate::agent::{RunMode, TraceMeta};
use crate::scl::KMode;

/// Condition name of a run as used in file names and reports.
pub fn condition_label(meta: &TraceMeta) -> String {
    match meta.mode {
        RunMode::Human => "human".to_string(),
        RunMode::Baseline => match meta.k {
            None | Some(KMode::Dynamic) => "baseline".to_string(),
            Some(k) => format!("scl_k{k}"),
        },
        RunMode::Agent => grid::full_label(&meta.k.unwrap_or(KMode::Dynamic), meta.ccl_threshold.unwrap_or(0.0)),
    }
}
