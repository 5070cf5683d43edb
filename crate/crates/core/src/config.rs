//! Scalar parameters for the world, both control layers and the harness.
//!
//! Every tunable number lives here. A `key=value` overrides file (pointed to
//! by `SOC_LANDER_CONFIG` in the CLI) can replace any of them.

use std::fmt::Write as _;

use thiserror::Error;

pub const CONFIG_ENV_VAR: &str = "SOC_LANDER_CONFIG";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key=value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{value}` is not a valid value for `{key}`")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvConfig {
    /// World units the ship descends per step.
    pub descent_speed: f64,
    /// Lateral displacement of one steering input.
    pub step_size: f64,
    pub ship_half_width: f64,
    /// How far below the ship marked content is visible; `None` = whole level.
    pub lookahead: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SclConfig {
    /// Width of the movement likelihood.
    pub likelihood_sigma: f64,
    pub k_spring: f64,
    pub c_damp: f64,
    /// Euler sub-steps per simulation step for the spring plant.
    pub plant_substeps: u32,
    /// Commands smaller than `dead_zone * step_size` produce no input.
    pub dead_zone: f64,
    pub initial_ll_soc: f64,
    /// Uniform mass mixed into the movement prior each tick.
    pub belief_forgetting: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CclConfig {
    pub initial_hl_soc: f64,
    /// Monitoring pause after each selection, in steps.
    pub grace_steps: u64,
    pub reliability_threshold: f64,
    /// Fraction of the remaining lateral distance requested per step.
    pub goal_gain: f64,
    /// Distance to the target below which no movement is requested.
    pub arrival_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub env: EnvConfig,
    pub scl: SclConfig,
    pub ccl: CclConfig,
    /// SCL ticks per CCL decision.
    pub scl_ticks_per_ccl: u32,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            env: EnvConfig {
                descent_speed: 0.5,
                step_size: 1.0,
                ship_half_width: 1.0,
                lookahead: None,
            },
            scl: SclConfig {
                likelihood_sigma: 0.5,
                k_spring: 0.3,
                c_damp: 1.2,
                plant_substeps: 1,
                dead_zone: 0.15,
                initial_ll_soc: 0.5,
                belief_forgetting: 0.1,
            },
            ccl: CclConfig {
                initial_hl_soc: 0.5,
                grace_steps: 6,
                reliability_threshold: 0.5,
                goal_gain: 0.25,
                arrival_tolerance: 1.0,
            },
            scl_ticks_per_ccl: 1,
        }
    }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConfigError::BadValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
        })
}

fn parse_u(line: usize, key: &str, value: &str) -> Result<u64, ConfigError> {
    value.parse::<u64>().map_err(|_| ConfigError::BadValue {
        line,
        key: key.to_string(),
        value: value.to_string(),
    })
}

impl Config {
    /// Applies `key=value` lines on top of `self`. `#` starts a comment.
    pub fn apply_overrides(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or(ConfigError::Syntax { line })?;
            self.set(line, key.trim(), value.trim())?;
        }
        self.validate()
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        let f = |v| parse_f64(line, key, v);
        match key {
            "env.descent_speed" => self.env.descent_speed = f(value)?,
            "env.step_size" => self.env.step_size = f(value)?,
            "env.ship_half_width" => self.env.ship_half_width = f(value)?,
            "env.lookahead" => {
                self.env.lookahead = if value == "full" { None } else { Some(f(value)?) }
            }
            "scl.likelihood_sigma" => self.scl.likelihood_sigma = f(value)?,
            "scl.k_spring" => self.scl.k_spring = f(value)?,
            "scl.c_damp" => self.scl.c_damp = f(value)?,
            "scl.plant_substeps" => self.scl.plant_substeps = parse_u(line, key, value)? as u32,
            "scl.dead_zone" => self.scl.dead_zone = f(value)?,
            "scl.initial_ll_soc" => self.scl.initial_ll_soc = f(value)?,
            "scl.belief_forgetting" => self.scl.belief_forgetting = f(value)?,
            "ccl.initial_hl_soc" => self.ccl.initial_hl_soc = f(value)?,
            "ccl.grace_steps" => self.ccl.grace_steps = parse_u(line, key, value)?,
            "ccl.reliability_threshold" => self.ccl.reliability_threshold = f(value)?,
            "ccl.goal_gain" => self.ccl.goal_gain = f(value)?,
            "ccl.arrival_tolerance" => self.ccl.arrival_tolerance = f(value)?,
            "agent.scl_ticks_per_ccl" => {
                self.scl_ticks_per_ccl = parse_u(line, key, value)? as u32
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.env.descent_speed <= 0.0 || self.env.step_size <= 0.0 {
            return bad("descent_speed and step_size must be positive");
        }
        if self.env.ship_half_width <= 0.0 {
            return bad("ship_half_width must be positive");
        }
        if self.ccl.arrival_tolerance < 0.0 {
            return bad("arrival_tolerance must be non-negative");
        }
        if self.scl.likelihood_sigma <= 0.0 {
            return bad("likelihood_sigma must be positive");
        }
        if self.scl.k_spring <= 0.0 || self.scl.c_damp <= 0.0 {
            return bad("spring constants must be positive");
        }
        if self.scl.c_damp * self.scl.c_damp < 4.0 * self.scl.k_spring {
            return bad("plant must be critically or over-damped (c^2 >= 4k)");
        }
        if self.scl.plant_substeps == 0 || self.scl_ticks_per_ccl == 0 {
            return bad("sub-step counts must be at least 1");
        }
        for (name, v) in [
            ("initial_ll_soc", self.scl.initial_ll_soc),
            ("initial_hl_soc", self.ccl.initial_hl_soc),
            ("reliability_threshold", self.ccl.reliability_threshold),
            ("belief_forgetting", self.scl.belief_forgetting),
            ("goal_gain", self.ccl.goal_gain),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::Invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }

    /// `key=value` snapshot in a fixed order, readable by `apply_overrides`.
    pub fn to_overrides(&self) -> String {
        let mut s = String::new();
        let lookahead = match self.env.lookahead {
            None => "full".to_string(),
            Some(v) => v.to_string(),
        };
        let _ = writeln!(s, "env.descent_speed={}", self.env.descent_speed);
        let _ = writeln!(s, "env.step_size={}", self.env.step_size);
        let _ = writeln!(s, "env.ship_half_width={}", self.env.ship_half_width);
        let _ = writeln!(s, "env.lookahead={lookahead}");
        let _ = writeln!(s, "scl.likelihood_sigma={}", self.scl.likelihood_sigma);
        let _ = writeln!(s, "scl.k_spring={}", self.scl.k_spring);
        let _ = writeln!(s, "scl.c_damp={}", self.scl.c_damp);
        let _ = writeln!(s, "scl.plant_substeps={}", self.scl.plant_substeps);
        let _ = writeln!(s, "scl.dead_zone={}", self.scl.dead_zone);
        let _ = writeln!(s, "scl.initial_ll_soc={}", self.scl.initial_ll_soc);
        let _ = writeln!(s, "scl.belief_forgetting={}", self.scl.belief_forgetting);
        let _ = writeln!(s, "ccl.initial_hl_soc={}", self.ccl.initial_hl_soc);
        let _ = writeln!(s, "ccl.grace_steps={}", self.ccl.grace_steps);
        let _ = writeln!(s, "ccl.reliability_threshold={}", self.ccl.reliability_threshold);
        let _ = writeln!(s, "ccl.goal_gain={}", self.ccl.goal_gain);
        let _ = writeln!(s, "ccl.arrival_tolerance={}", self.ccl.arrival_tolerance);
        let _ = writeln!(s, "agent.scl_ticks_per_ccl={}", self.scl_ticks_per_ccl);
        s
    }
}
