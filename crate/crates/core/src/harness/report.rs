//! Per-condition aggregates, the qualitative grid checks and the summary
//! documents.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::grid::{full_label, RunFailure, GRID_K, GRID_THRESHOLDS};
use super::metrics::RunMetrics;
use crate::scl::KMode;

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionAggregate {
    pub condition: String,
    pub runs: usize,
    pub crashes: u32,
    pub strategy_changes: Option<usize>,
    pub triggers: usize,
    /// Means over runs of the per-run means.
    pub mean_ll: Option<f64>,
    pub mean_hl: Option<f64>,
    /// Pooled over events with both windows available.
    pub events: usize,
    pub prior_ll: Option<f64>,
    pub post_ll: Option<f64>,
    pub prior_hl: Option<f64>,
    pub post_hl: Option<f64>,
}

fn mean_of(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Canonical order so aggregation does not depend on run order.
pub fn sort_runs(runs: &mut [RunMetrics]) {
    runs.sort_by(|a, b| {
        (a.condition.as_str(), a.level.as_str(), a.seed).cmp(&(b.condition.as_str(), b.level.as_str(), b.seed))
    });
}

/// (prior, posterior) SoC pairs of every event with both windows.
fn event_pairs(runs: &[&RunMetrics], hl: bool) -> Vec<(f64, f64)> {
    runs.iter()
        .flat_map(|r| r.events.iter())
        .filter_map(|e| {
            if hl {
                Some((e.soc_prior_hl?, e.soc_post_hl?))
            } else {
                Some((e.soc_prior_ll?, e.soc_post_ll?))
            }
        })
        .collect()
}

pub fn aggregate(runs: &[RunMetrics]) -> Vec<ConditionAggregate> {
    let mut sorted = runs.to_vec();
    sort_runs(&mut sorted);
    let mut groups: BTreeMap<&str, Vec<&RunMetrics>> = BTreeMap::new();
    for r in &sorted {
        groups.entry(r.condition.as_str()).or_default().push(r);
    }
    let mut out: Vec<ConditionAggregate> = groups
        .into_iter()
        .map(|(cond, rs)| {
            let ll: Vec<f64> = rs.iter().filter_map(|r| r.mean_ll).collect();
            let hl: Vec<f64> = rs.iter().filter_map(|r| r.mean_hl).collect();
            let ll_pairs = event_pairs(&rs, false);
            let hl_pairs = event_pairs(&rs, true);
            let firsts = |p: &[(f64, f64)]| p.iter().map(|x| x.0).collect::<Vec<_>>();
            let seconds = |p: &[(f64, f64)]| p.iter().map(|x| x.1).collect::<Vec<_>>();
            ConditionAggregate {
                condition: cond.to_string(),
                runs: rs.len(),
                crashes: rs.iter().map(|r| r.crashes).sum(),
                strategy_changes: rs
                    .iter()
                    .map(|r| r.strategy_changes)
                    .try_fold(0usize, |acc, s| s.map(|s| acc + s)),
                triggers: rs.iter().map(|r| r.triggers).sum(),
                mean_ll: mean_of(&ll),
                mean_hl: mean_of(&hl),
                events: rs.iter().map(|r| r.events.len()).sum(),
                prior_ll: mean_of(&firsts(&ll_pairs)),
                post_ll: mean_of(&seconds(&ll_pairs)),
                prior_hl: mean_of(&firsts(&hl_pairs)),
                post_hl: mean_of(&seconds(&hl_pairs)),
            }
        })
        .collect();
    // baseline first, then the grid conditions in K-major order
    out.sort_by_key(|a| (a.condition != "baseline", a.condition.clone()));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The run set lacks the conditions the check needs.
    NotApplicable,
}

impl CheckStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::NotApplicable => "N/A",
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

fn lookup(aggs: &[ConditionAggregate], k: f64, t: f64) -> Option<&ConditionAggregate> {
    let label = full_label(&KMode::Fixed(k), t);
    aggs.iter().find(|a| a.condition == label)
}

/// The nine full-hierarchy aggregates indexed [k][threshold], if present.
fn grid_cells(aggs: &[ConditionAggregate]) -> Option<[[&ConditionAggregate; 3]; 3]> {
    let mut cells = Vec::with_capacity(9);
    for k in GRID_K {
        for t in GRID_THRESHOLDS {
            cells.push(lookup(aggs, k, t)?);
        }
    }
    Some([
        [cells[0], cells[1], cells[2]],
        [cells[3], cells[4], cells[5]],
        [cells[6], cells[7], cells[8]],
    ])
}

fn na(name: &'static str) -> CheckResult {
    CheckResult {
        name,
        status: CheckStatus::NotApplicable,
        detail: "grid conditions missing".into(),
    }
}

/// Total crashes over the three thresholds is lowest at K = 0.5. A tie
/// with one neighbour is accepted; a three-way tie is not a minimum.
pub fn check_balanced_k(aggs: &[ConditionAggregate]) -> CheckResult {
    let name = "balanced_k";
    let Some(cells) = grid_cells(aggs) else { return na(name) };
    let totals: Vec<u32> = cells.iter().map(|row| row.iter().map(|c| c.crashes).sum()).collect();
    let (c3, c5, c7) = (totals[0], totals[1], totals[2]);
    let ok = c5 <= c3 && c5 <= c7 && !(c5 == c3 && c5 == c7);
    CheckResult {
        name,
        status: CheckStatus::from_bool(ok),
        detail: format!("crashes k0.3={c3} k0.5={c5} k0.7={c7}"),
    }
}

/// Share of pairs with posterior > prior, ties excluded.
fn lift_fraction(pairs: &[(f64, f64)]) -> Option<f64> {
    let ups = pairs.iter().filter(|p| p.1 > p.0).count();
    let downs = pairs.iter().filter(|p| p.1 < p.0).count();
    (ups + downs > 0).then(|| ups as f64 / (ups + downs) as f64)
}

pub const LIFT_MAJORITY: f64 = 0.55;

/// Pooled over the full-hierarchy runs, SoC after a strategy change
/// exceeds SoC before it, on average and for a majority of events.
pub fn check_lift(runs: &[RunMetrics]) -> CheckResult {
    let name = "soc_lift";
    let mut full: Vec<&RunMetrics> = runs.iter().filter(|r| r.strategy_changes.is_some()).collect();
    full.sort_by(|a, b| (a.condition.as_str(), a.level.as_str(), a.seed).cmp(&(b.condition.as_str(), b.level.as_str(), b.seed)));
    let mut detail = String::new();
    let mut ok = true;
    let mut any = false;
    for (label, hl) in [("ll", false), ("hl", true)] {
        let pairs = event_pairs(&full, hl);
        if pairs.is_empty() {
            let _ = write!(detail, "{label}: no events; ");
            continue;
        }
        any = true;
        let prior = mean_of(&pairs.iter().map(|p| p.0).collect::<Vec<_>>()).unwrap_or(0.0);
        let post = mean_of(&pairs.iter().map(|p| p.1).collect::<Vec<_>>()).unwrap_or(0.0);
        let frac = lift_fraction(&pairs).unwrap_or(0.0);
        ok &= post > prior && frac > LIFT_MAJORITY;
        let _ = write!(
            detail,
            "{label}: prior={prior:.4} post={post:.4} lifted={frac:.4} n={}; ",
            pairs.len()
        );
    }
    if !any {
        return CheckResult { name, status: CheckStatus::NotApplicable, detail: "no strategy changes".into() };
    }
    CheckResult {
        name,
        status: CheckStatus::from_bool(ok),
        detail: detail.trim_end_matches("; ").to_string(),
    }
}

/// Mean HL SoC is at least the mean LL SoC in six or more of the nine
/// full-hierarchy conditions.
pub fn check_hl_over_ll(aggs: &[ConditionAggregate]) -> CheckResult {
    let name = "hl_over_ll";
    let Some(cells) = grid_cells(aggs) else { return na(name) };
    let count = cells
        .iter()
        .flatten()
        .filter(|c| matches!((c.mean_hl, c.mean_ll), (Some(h), Some(l)) if h >= l))
        .count();
    CheckResult {
        name,
        status: CheckStatus::from_bool(count >= 6),
        detail: format!("{count}/9 conditions with hl >= ll"),
    }
}

/// For each K, strategy changes do not decrease with the threshold; one
/// inversion over the grid is tolerated.
pub fn check_monotonicity(aggs: &[ConditionAggregate]) -> CheckResult {
    let name = "threshold_monotonicity";
    let Some(cells) = grid_cells(aggs) else { return na(name) };
    let mut inversions = 0;
    let mut rows = Vec::new();
    for (k, row) in GRID_K.iter().zip(cells.iter()) {
        let s: Vec<usize> = row.iter().map(|c| c.strategy_changes.unwrap_or(0)).collect();
        inversions += s.windows(2).filter(|w| w[1] < w[0]).count();
        rows.push(format!("k{k}: {}/{}/{}", s[0], s[1], s[2]));
    }
    CheckResult {
        name,
        status: CheckStatus::from_bool(inversions <= 1),
        detail: format!("{} (inversions {inversions})", rows.join(", ")),
    }
}

pub fn run_checks(runs: &[RunMetrics]) -> Vec<CheckResult> {
    let aggs = aggregate(runs);
    vec![
        check_balanced_k(&aggs),
        check_lift(runs),
        check_hl_over_ll(&aggs),
        check_monotonicity(&aggs),
    ]
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

pub struct Report {
    pub aggregates: Vec<ConditionAggregate>,
    pub checks: Vec<CheckResult>,
    pub text: String,
    pub csv: String,
    pub runs_csv: String,
}

impl Report {
    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }
}

/// Builds the summary. Fails on an empty run set.
pub fn build_report(runs: &[RunMetrics], failures: &[RunFailure]) -> Result<Report, String> {
    if runs.is_empty() {
        return Err("no runs to report".into());
    }
    let mut sorted = runs.to_vec();
    sort_runs(&mut sorted);
    let aggregates = aggregate(&sorted);
    let checks = run_checks(&sorted);

    let mut text = String::new();
    let _ = writeln!(text, "soc-lander grid summary");
    let _ = writeln!(text, "runs: {}", sorted.len());
    let _ = writeln!(text, "failed runs: {}", failures.len());
    for f in failures {
        let _ = writeln!(text, "  {}: {}", f.run, f.message);
    }
    for a in &aggregates {
        let _ = writeln!(text);
        let _ = writeln!(text, "[{}]", a.condition);
        let _ = writeln!(text, "runs: {}", a.runs);
        let _ = writeln!(text, "crashes: {}", a.crashes);
        let _ = writeln!(text, "crashes_per_run: {:.4}", f64::from(a.crashes) / a.runs as f64);
        match a.strategy_changes {
            Some(s) => {
                let _ = writeln!(text, "strategy_changes: {s}");
                let _ = writeln!(text, "strategy_changes_per_run: {:.4}", s as f64 / a.runs as f64);
                let _ = writeln!(text, "triggers: {}", a.triggers);
            }
            None => {
                let _ = writeln!(text, "strategy_changes: n/a");
            }
        }
        let _ = writeln!(text, "mean_ll_soc: {}", fmt_opt(a.mean_ll));
        let _ = writeln!(text, "mean_hl_soc: {}", fmt_opt(a.mean_hl));
        if a.events == 0 {
            let _ = writeln!(text, "soc_around_changes: n/a");
        } else {
            let _ = writeln!(text, "events: {}", a.events);
            let _ = writeln!(text, "ll_prior_150ms: {}", fmt_opt(a.prior_ll));
            let _ = writeln!(text, "ll_posterior_600ms: {}", fmt_opt(a.post_ll));
            let _ = writeln!(text, "hl_prior_150ms: {}", fmt_opt(a.prior_hl));
            let _ = writeln!(text, "hl_posterior_600ms: {}", fmt_opt(a.post_hl));
        }
    }
    let _ = writeln!(text);
    let _ = writeln!(text, "checks");
    for c in &checks {
        let _ = writeln!(text, "{}: {} ({})", c.name, c.status.as_str(), c.detail);
    }

    let mut csv = String::from(
        "condition,runs,crashes,strategy_changes,triggers,mean_ll_soc,mean_hl_soc,events,ll_prior,ll_posterior,hl_prior,hl_posterior\n",
    );
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    for a in &aggregates {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            a.condition,
            a.runs,
            a.crashes,
            a.strategy_changes.map(|s| s.to_string()).unwrap_or_default(),
            a.triggers,
            cell(a.mean_ll),
            cell(a.mean_hl),
            a.events,
            cell(a.prior_ll),
            cell(a.post_ll),
            cell(a.prior_hl),
            cell(a.post_hl),
        );
    }

    let mut runs_csv = String::from("condition,level,seed,steps,crashed,strategy_changes,triggers,mean_ll_soc,mean_hl_soc\n");
    for r in &sorted {
        let _ = writeln!(
            runs_csv,
            "{},{},{},{},{},{},{},{},{}",
            r.condition,
            r.level,
            r.seed,
            r.steps,
            r.crashes,
            r.strategy_changes.map(|s| s.to_string()).unwrap_or_default(),
            r.triggers,
            cell(r.mean_ll),
            cell(r.mean_hl),
        );
    }
    Ok(Report { aggregates, checks, text, csv, runs_csv })
}
