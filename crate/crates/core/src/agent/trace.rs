//! Episode trace files: a CSV with one row per step plus a `key=value`
//! sidecar holding the run configuration.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{AgentConfig, AgentError, LayerOrder};
use crate::config::Config;
use crate::environment::Input;
use crate::scl::KMode;

pub const TRACE_HEADER: &str = "step,x,y,input,ll_soc,hl_soc,intention,trigger,crashed";
pub const TRACE_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub step: u64,
    /// Ship position after the step.
    pub x: f64,
    pub y: f64,
    pub input: Input,
    pub ll_soc: Option<f64>,
    pub hl_soc: Option<f64>,
    /// `<selection serial>:<target region>`.
    pub intention: Option<String>,
    pub trigger: bool,
    pub crashed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Crashed,
    Landed,
    /// Session ended by the client before the ship crashed or landed.
    Aborted,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Crashed => "crashed",
            Outcome::Landed => "landed",
            Outcome::Aborted => "aborted",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "crashed" => Ok(Outcome::Crashed),
            "landed" => Ok(Outcome::Landed),
            "aborted" => Ok(Outcome::Aborted),
            other => Err(format!("unknown outcome `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Agent,
    Baseline,
    Human,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Agent => "agent",
            RunMode::Baseline => "baseline",
            RunMode::Human => "human",
        }
    }
}

impl FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "agent" => Ok(RunMode::Agent),
            "baseline" => Ok(RunMode::Baseline),
            "human" => Ok(RunMode::Human),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceMeta {
    pub schema: u32,
    pub mode: RunMode,
    pub level: String,
    pub seed: u64,
    pub k: Option<KMode>,
    pub ccl_threshold: Option<f64>,
    pub layer_order: LayerOrder,
    pub outcome: Outcome,
    pub config: Config,
}

impl TraceMeta {
    pub fn for_agent(level: &str, cfg: &AgentConfig, outcome: Outcome) -> Self {
        Self {
            schema: TRACE_SCHEMA,
            mode: cfg.mode(),
            level: level.to_string(),
            seed: cfg.seed,
            k: Some(cfg.k_mode),
            ccl_threshold: cfg.ccl_enabled.then_some(cfg.ccl_threshold),
            layer_order: cfg.layer_order,
            outcome,
            config: cfg.config.clone(),
        }
    }

    pub fn for_human(level: &str, seed: u64, config: &Config, outcome: Outcome) -> Self {
        Self {
            schema: TRACE_SCHEMA,
            mode: RunMode::Human,
            level: level.to_string(),
            seed,
            k: None,
            ccl_threshold: None,
            layer_order: LayerOrder::default(),
            outcome,
            config: config.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "schema={}", self.schema);
        let _ = writeln!(s, "mode={}", self.mode.as_str());
        let _ = writeln!(s, "level={}", self.level);
        let _ = writeln!(s, "seed={}", self.seed);
        if let Some(k) = self.k {
            let _ = writeln!(s, "k={k}");
        }
        if let Some(t) = self.ccl_threshold {
            let _ = writeln!(s, "ccl_threshold={t}");
        }
        let _ = writeln!(s, "layer_order={}", self.layer_order);
        let _ = writeln!(s, "outcome={}", self.outcome);
        s.push_str(&self.config.to_overrides());
        s
    }

    pub fn parse(text: &str) -> Result<Self, AgentError> {
        let mut schema = None;
        let mut mode = None;
        let mut level = None;
        let mut seed = None;
        let mut k = None;
        let mut ccl_threshold = None;
        let mut layer_order = LayerOrder::default();
        let mut outcome = None;
        let mut overrides = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let err = |m: String| AgentError::Parse { line, message: m };
            let (key, value) = raw
                .split_once('=')
                .ok_or_else(|| err("expected key=value".into()))?;
            match key {
                "schema" => {
                    let v: u32 = value.parse().map_err(|_| err(format!("bad schema `{value}`")))?;
                    if v != TRACE_SCHEMA {
                        return Err(AgentError::SchemaMismatch(format!(
                            "trace schema {v}, this build reads {TRACE_SCHEMA}"
                        )));
                    }
                    schema = Some(v);
                }
                "mode" => mode = Some(value.parse().map_err(err)?),
                "level" => level = Some(value.to_string()),
                "seed" => seed = Some(value.parse().map_err(|_| err(format!("bad seed `{value}`")))?),
                "k" => k = Some(value.parse().map_err(err)?),
                "ccl_threshold" => {
                    ccl_threshold =
                        Some(value.parse().map_err(|_| err(format!("bad threshold `{value}`")))?)
                }
                "layer_order" => layer_order = value.parse().map_err(err)?,
                "outcome" => outcome = Some(value.parse().map_err(err)?),
                _ if key.contains('.') => {
                    overrides.push_str(raw);
                    overrides.push('\n');
                }
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        let missing = |k: &str| AgentError::SchemaMismatch(format!("metadata lacks `{k}`"));
        let mut config = Config::default();
        config.apply_overrides(&overrides)?;
        Ok(Self {
            schema: schema.ok_or_else(|| missing("schema"))?,
            mode: mode.ok_or_else(|| missing("mode"))?,
            level: level.ok_or_else(|| missing("level"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            k,
            ccl_threshold,
            layer_order,
            outcome: outcome.ok_or_else(|| missing("outcome"))?,
            config,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeTrace {
    pub records: Vec<TraceRecord>,
    pub meta: TraceMeta,
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Sidecar path for a trace CSV: `run.csv` -> `run.meta`.
pub fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta")
}

impl EpisodeTrace {
    pub fn crashed(&self) -> bool {
        self.meta.outcome == Outcome::Crashed
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.records.len() + 1));
        s.push_str(TRACE_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.step,
                r.x,
                r.y,
                r.input,
                opt_f64(r.ll_soc),
                opt_f64(r.hl_soc),
                r.intention.as_deref().unwrap_or(""),
                u8::from(r.trigger),
                u8::from(r.crashed),
            );
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<Vec<TraceRecord>, AgentError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == TRACE_HEADER => {}
            Some(h) => return Err(AgentError::SchemaMismatch(format!("unexpected header `{h}`"))),
            None => return Err(AgentError::SchemaMismatch("empty trace".into())),
        }
        let mut records = Vec::new();
        for (idx, raw) in lines.enumerate() {
            let line = idx + 2;
            if raw.is_empty() {
                continue;
            }
            let err = |m: String| AgentError::Parse { line, message: m };
            let cols: Vec<&str> = raw.split(',').collect();
            if cols.len() != 9 {
                return Err(err(format!("expected 9 columns, found {}", cols.len())));
            }
            let num = |i: usize| -> Result<f64, AgentError> {
                cols[i]
                    .parse::<f64>()
                    .map_err(|_| err(format!("bad number `{}`", cols[i])))
            };
            let opt = |i: usize| -> Result<Option<f64>, AgentError> {
                if cols[i].is_empty() {
                    Ok(None)
                } else {
                    num(i).map(Some)
                }
            };
            let flag = |i: usize| match cols[i] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(err(format!("bad flag `{other}`"))),
            };
            records.push(TraceRecord {
                step: cols[0].parse().map_err(|_| err(format!("bad step `{}`", cols[0])))?,
                x: num(1)?,
                y: num(2)?,
                input: cols[3].parse().map_err(err)?,
                ll_soc: opt(4)?,
                hl_soc: opt(5)?,
                intention: (!cols[6].is_empty()).then(|| cols[6].to_string()),
                trigger: flag(7)?,
                crashed: flag(8)?,
            });
        }
        Ok(records)
    }

    /// Writes `<path>` and its `.meta` sidecar.
    pub fn write(&self, path: &Path) -> Result<(), AgentError> {
        std::fs::write(path, self.to_csv())?;
        std::fs::write(meta_path(path), self.meta.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, AgentError> {
        let meta = TraceMeta::parse(&std::fs::read_to_string(meta_path(path))?)?;
        let records = Self::parse_csv(&std::fs::read_to_string(path)?)?;
        Ok(Self { records, meta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EpisodeTrace {
        EpisodeTrace {
            records: vec![
                TraceRecord {
                    step: 0,
                    x: 20.1,
                    y: 235.5,
                    input: Input::Right,
                    ll_soc: Some(0.5),
                    hl_soc: Some(0.6),
                    intention: Some("1:center".into()),
                    trigger: false,
                    crashed: false,
                },
                TraceRecord {
                    step: 1,
                    x: 0.1 + 0.2,
                    y: 235.0,
                    input: Input::None,
                    ll_soc: None,
                    hl_soc: None,
                    intention: None,
                    trigger: true,
                    crashed: true,
                },
            ],
            meta: TraceMeta::for_agent("a", &AgentConfig::default(), Outcome::Crashed),
        }
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let t = sample();
        let csv = t.to_csv();
        let back = EpisodeTrace::parse_csv(&csv).unwrap();
        assert_eq!(back, t.records);
        assert_eq!(
            EpisodeTrace { records: back, meta: t.meta.clone() }.to_csv(),
            csv
        );
    }

    #[test]
    fn meta_round_trip() {
        let m = sample().meta;
        let back = TraceMeta::parse(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_text(), m.to_text());
    }

    #[test]
    fn wrong_schema_rejected() {
        let text = sample().meta.to_text().replace("schema=1", "schema=2");
        assert!(matches!(TraceMeta::parse(&text), Err(AgentError::SchemaMismatch(_))));
        assert!(matches!(
            EpisodeTrace::parse_csv("step,x,y\n"),
            Err(AgentError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = format!("{TRACE_HEADER}\n0,1,2,up,,,,0,0\n");
        assert!(matches!(
            EpisodeTrace::parse_csv(&csv),
            Err(AgentError::Parse { line: 2, .. })
        ));
    }
}
