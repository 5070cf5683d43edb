//! One agent-environment episode: the situated state buffer, the per-step
//! exchange between the two layers, and trace recording.

mod replay;
mod trace;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::ccl::{goal_toward, intention_to_goal, ActionIntention, CclState, IntentionLibrary};
use crate::config::{CclConfig, Config, ConfigError};
use crate::environment::{EnvError, Input, Level, Observation, WorldState};
use crate::scl::{KMode, MovementGoal, SclFeedback, SclState};

pub use crate::ccl::SituatedStateBuffer;
pub use replay::{replay, Divergence, ReplayReport};
pub use trace::{meta_path, EpisodeTrace, Outcome, RunMode, TraceMeta, TraceRecord, TRACE_HEADER, TRACE_SCHEMA};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("trace schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("trace parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Env(#[from] EnvError),
}

impl From<ConfigError> for AgentError {
    fn from(e: ConfigError) -> Self {
        AgentError::ConfigInvalid(e.to_string())
    }
}

/// Which layer runs first within a step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LayerOrder {
    #[default]
    CclFirst,
    SclFirst,
}

impl fmt::Display for LayerOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LayerOrder::CclFirst => "ccl_first",
            LayerOrder::SclFirst => "scl_first",
        })
    }
}

impl FromStr for LayerOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ccl_first" => Ok(LayerOrder::CclFirst),
            "scl_first" => Ok(LayerOrder::SclFirst),
            other => Err(format!("unknown layer order `{other}`")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AgentConfig {
    pub k_mode: KMode,
    pub ccl_threshold: f64,
    pub ccl_enabled: bool,
    pub seed: u64,
    pub config: Config,
    pub layer_order: LayerOrder,
    pub library: Arc<IntentionLibrary>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            k_mode: KMode::Fixed(0.5),
            ccl_threshold: 0.5,
            ccl_enabled: true,
            seed: 0,
            config: Config::default(),
            layer_order: LayerOrder::CclFirst,
            library: Arc::new(IntentionLibrary::default()),
        }
    }
}

impl AgentConfig {
    /// SCL-only run with the dynamic gain.
    pub fn baseline(seed: u64) -> Self {
        Self {
            k_mode: KMode::Dynamic,
            ccl_enabled: false,
            seed,
            ..Self::default()
        }
    }

    pub fn full(k: f64, ccl_threshold: f64, seed: u64) -> Self {
        Self {
            k_mode: KMode::Fixed(k),
            ccl_threshold,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        self.config.validate()?;
        if let KMode::Fixed(k) = self.k_mode {
            if !(0.0..=1.0).contains(&k) {
                return Err(AgentError::ConfigInvalid(format!("K = {k} outside [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.ccl_threshold) {
            return Err(AgentError::ConfigInvalid(format!(
                "CCL threshold {} outside [0, 1]",
                self.ccl_threshold
            )));
        }
        Ok(())
    }

    pub fn mode(&self) -> RunMode {
        if self.ccl_enabled {
            RunMode::Agent
        } else {
            RunMode::Baseline
        }
    }
}

/// Goal of the SCL-only baseline: the centre of the corridor at the ship.
pub fn hold_center_goal(obs: &Observation, cfg: &CclConfig, max_step: f64) -> MovementGoal {
    let (left, right) = obs.corridor_at_ship();
    goal_toward(0.5 * (left + right), obs.ship_x, cfg, max_step)
}

/// A running agent coupled to its world. `step` advances one simulation
/// step and returns its trace record.
pub struct Agent {
    pub world: WorldState,
    pub scl: SclState,
    pub ccl: Option<CclState>,
    pub buffer: SituatedStateBuffer,
    cfg: AgentConfig,
    intention_serial: u64,
}

impl Agent {
    pub fn new(level: Arc<Level>, cfg: &AgentConfig) -> Result<Self, AgentError> {
        cfg.validate()?;
        let c = &cfg.config;
        let world = WorldState::new(level, &c.env, cfg.seed);
        let scl = SclState::new(&c.scl, cfg.k_mode, c.env.step_size);
        let ccl = cfg
            .ccl_enabled
            .then(|| CclState::new(&c.ccl, cfg.ccl_threshold, cfg.library.clone()));
        let observation = world.observe();
        let buffer = SituatedStateBuffer {
            step: 0,
            feedback: SclFeedback {
                ll_soc: scl.ll_soc,
                perceived_dx: 0.0,
                position: observation.ship_x,
            },
            feedback_step: 0,
            observation,
            goal: MovementGoal::hold(),
            intention: None,
        };
        Ok(Self {
            world,
            scl,
            ccl,
            buffer,
            cfg: cfg.clone(),
            intention_serial: 0,
        })
    }

    pub fn done(&self) -> bool {
        self.world.done
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    /// Runs the CCL production for this step and refreshes the goal in the
    /// buffer. Returns the trigger flag.
    fn cognitive_step(&mut self) -> bool {
        let c = &self.cfg.config;
        let max_step = self.scl.max_step();
        let obs = &self.buffer.observation;
        let Some(ccl) = self.ccl.as_mut() else {
            self.buffer.goal = hold_center_goal(obs, &c.ccl, max_step);
            return false;
        };
        let decision = ccl.tick(&self.buffer);
        if decision.selected.is_some() {
            self.intention_serial += 1;
        }
        let intention = ccl.current_intention.expect("selected at the first tick");
        let cmd = intention_to_goal(&intention, obs, &c.ccl, max_step);
        if let Some(bias) = cmd.compensation_bias {
            self.scl.set_force_prior(-bias);
        }
        self.buffer.goal = cmd.goal;
        self.buffer.intention = Some(intention);
        decision.trigger
    }

    fn sensorimotor_step(&mut self) -> Input {
        let (input, feedback) = self.scl.tick(self.buffer.goal, &self.buffer.observation);
        self.buffer.feedback = feedback;
        self.buffer.feedback_step = self.buffer.step;
        input
    }

    pub fn step(&mut self) -> Result<TraceRecord, AgentError> {
        let step = self.world.step;
        self.buffer.step = step;
        let ccl_due = step.is_multiple_of(u64::from(self.cfg.config.scl_ticks_per_ccl));
        let (trigger, input) = match self.cfg.layer_order {
            LayerOrder::CclFirst => {
                let trigger = ccl_due && self.cognitive_step();
                (trigger, self.sensorimotor_step())
            }
            LayerOrder::SclFirst => {
                if step == 0 {
                    self.cognitive_step();
                }
                let input = self.sensorimotor_step();
                (ccl_due && step > 0 && self.cognitive_step(), input)
            }
        };
        let obs = self.world.step(input)?;
        self.buffer.observation = obs;
        Ok(TraceRecord {
            step,
            x: self.world.ship.x,
            y: self.world.ship.y,
            input,
            ll_soc: Some(self.scl.ll_soc),
            hl_soc: self.ccl.as_ref().map(CclState::hl_soc),
            intention: self
                .buffer
                .intention
                .filter(|_| self.ccl.is_some())
                .map(|i| intention_label(self.intention_serial, &i)),
            trigger,
            crashed: self.world.crashed,
        })
    }
}

pub fn intention_label(serial: u64, i: &ActionIntention) -> String {
    format!("{serial}:{}", i.target_region)
}

/// Runs one episode to completion.
pub fn run_episode(level: Arc<Level>, cfg: &AgentConfig) -> Result<EpisodeTrace, AgentError> {
    let mut agent = Agent::new(level.clone(), cfg)?;
    let mut records = Vec::new();
    while !agent.done() {
        records.push(agent.step()?);
    }
    let outcome = if agent.world.crashed {
        Outcome::Crashed
    } else {
        Outcome::Landed
    };
    Ok(EpisodeTrace {
        records,
        meta: TraceMeta::for_agent(&level.id, cfg, outcome),
    })
}
