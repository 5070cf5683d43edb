//! The evaluation grid: every condition on every level and seed.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::metrics::{compute_metrics, RunMetrics};
use crate::agent::{run_episode, AgentConfig, AgentError, EpisodeTrace};
use crate::ccl::IntentionLibrary;
use crate::config::Config;
use crate::environment::{builtin_levels, Level};
use crate::scl::KMode;

pub const GRID_K: [f64; 3] = [0.3, 0.5, 0.7];
pub const GRID_THRESHOLDS: [f64; 3] = [0.3, 0.5, 0.7];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Condition {
    /// SCL only, dynamic gain.
    Baseline,
    Full { k: f64, threshold: f64 },
}

impl Condition {
    pub fn agent_config(&self, seed: u64, config: &Config, library: &Arc<IntentionLibrary>) -> AgentConfig {
        let mut cfg = match *self {
            Condition::Baseline => AgentConfig::baseline(seed),
            Condition::Full { k, threshold } => AgentConfig::full(k, threshold, seed),
        };
        cfg.config = config.clone();
        cfg.library = library.clone();
        cfg
    }

    /// Baseline followed by the nine K x threshold combinations.
    pub fn default_set() -> Vec<Condition> {
        let mut v = vec![Condition::Baseline];
        for k in GRID_K {
            for threshold in GRID_THRESHOLDS {
                v.push(Condition::Full { k, threshold });
            }
        }
        v
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Baseline => f.write_str("baseline"),
            Condition::Full { k, threshold } => {
                f.write_str(&full_label(&KMode::Fixed(*k), *threshold))
            }
        }
    }
}

pub(crate) fn full_label(k: &KMode, threshold: f64) -> String {
    format!("k{k}_t{threshold}")
}

#[derive(Clone, Debug)]
pub struct GridSpec {
    pub levels: Vec<Arc<Level>>,
    pub conditions: Vec<Condition>,
    pub seeds: Vec<u64>,
    pub config: Config,
    pub library: Arc<IntentionLibrary>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            levels: builtin_levels(),
            conditions: Condition::default_set(),
            seeds: vec![0],
            config: Config::default(),
            library: Arc::new(IntentionLibrary::default()),
        }
    }
}

impl GridSpec {
    pub fn with_repeats(mut self, base_seed: u64, repeats: u64) -> Self {
        self.seeds = (base_seed..base_seed + repeats.max(1)).collect();
        self
    }

    pub fn run_count(&self) -> usize {
        self.levels.len() * self.conditions.len() * self.seeds.len()
    }
}

#[derive(Clone, Debug)]
pub struct RunFailure {
    pub run: String,
    pub message: String,
}

#[derive(Clone, Debug, Default)]
pub struct GridResult {
    /// Sorted by condition, level, seed in grid order.
    pub runs: Vec<RunMetrics>,
    pub failures: Vec<RunFailure>,
}

/// File stem for one run's trace.
pub fn run_name(condition: &str, level: &str, seed: u64) -> String {
    format!("{condition}__{level}__s{seed}")
}

pub fn traces_dir(out: &Path) -> PathBuf {
    out.join("traces")
}

/// Runs every (condition, level, seed) combination in parallel. Traces are
/// written below `out/traces` when `out` is given. Failed runs are
/// collected rather than aborting the grid.
pub fn run_grid(spec: &GridSpec, out: Option<&Path>) -> Result<GridResult, AgentError> {
    if let Some(dir) = out {
        std::fs::create_dir_all(traces_dir(dir))?;
    }
    let mut jobs = Vec::with_capacity(spec.run_count());
    for cond in &spec.conditions {
        for level in &spec.levels {
            for &seed in &spec.seeds {
                jobs.push((*cond, level.clone(), seed));
            }
        }
    }
    let outcomes: Vec<Result<RunMetrics, RunFailure>> = jobs
        .into_par_iter()
        .map(|(cond, level, seed)| {
            let name = run_name(&cond.to_string(), &level.id, seed);
            let fail = |e: AgentError| RunFailure { run: name.clone(), message: e.to_string() };
            let cfg = cond.agent_config(seed, &spec.config, &spec.library);
            let trace: EpisodeTrace = run_episode(level, &cfg).map_err(fail)?;
            if let Some(dir) = out {
                trace
                    .write(&traces_dir(dir).join(format!("{name}.csv")))
                    .map_err(fail)?;
            }
            Ok(compute_metrics(&trace))
        })
        .collect();
    let mut result = GridResult::default();
    for o in outcomes {
        match o {
            Ok(m) => result.runs.push(m),
            Err(f) => result.failures.push(f),
        }
    }
    Ok(result)
}

/// Reads every trace below `dir/traces` (or `dir` itself) and recomputes
/// its metrics.
pub fn load_runs(dir: &Path) -> Result<Vec<RunMetrics>, AgentError> {
    let nested = traces_dir(dir);
    let dir = if nested.is_dir() { nested } else { dir.to_path_buf() };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| EpisodeTrace::read(p).map(|t| compute_metrics(&t)))
        .collect()
}
