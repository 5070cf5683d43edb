//! Live sessions on the task world: human play with self-report probes and
//! observed agent runs. [`Session`] and [`Connection`] do no I/O; the
//! socket transports live in [`server`].

mod protocol;
pub mod server;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use crate::agent::{Agent, AgentConfig, AgentError, EpisodeTrace, Outcome, TraceMeta, TraceRecord};
use crate::ccl::IntentionLibrary;
use crate::config::Config;
use crate::environment::{builtin_level, Input, Level, WorldState};
use crate::scl::KMode;

pub use protocol::{
    parse_client_message, ClientMessage, CreateRequest, Dir, ErrorCode, Frame, ServerMessage,
    SessionMode, ZoneMarker, PROTOCOL_VERSION,
};

/// Steps between self-report probes (10 s at 20 steps per second).
pub const PROBE_INTERVAL: u64 = 200;
/// Real-time step length in human mode.
pub const STEP_INTERVAL: Duration = Duration::from_millis(50);
pub const MAX_SPEED: f64 = 1000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("unknown level `{0}`")]
    UnknownLevel(String),
    #[error("invalid session configuration: {0}")]
    InvalidConfig(String),
    #[error("session has ended")]
    SessionEnded,
    #[error("input received after the episode finished")]
    InputAfterDone,
    #[error("session has not ended")]
    SessionNotEnded,
    #[error("inputs are only accepted in human mode")]
    WrongMode,
    #[error("no probe is pending")]
    NoProbePending,
    #[error("probe value {0} is outside 1..=7")]
    BadProbeValue(i64),
}

impl SessionError {
    pub fn code(&self) -> ErrorCode {
        match self {
            SessionError::UnknownLevel(_) => ErrorCode::UnknownLevel,
            SessionError::InvalidConfig(_) => ErrorCode::InvalidConfig,
            SessionError::SessionEnded => ErrorCode::SessionEnded,
            SessionError::InputAfterDone => ErrorCode::InputAfterDone,
            SessionError::SessionNotEnded => ErrorCode::SessionNotEnded,
            SessionError::WrongMode => ErrorCode::WrongMode,
            SessionError::NoProbePending => ErrorCode::NoProbePending,
            SessionError::BadProbeValue(_) => ErrorCode::BadProbeValue,
        }
    }

    fn to_message(&self) -> ServerMessage {
        ServerMessage::error(self.code(), self.to_string())
    }
}

/// A self-report answered by the player.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Probe {
    /// Step at which the probe was requested.
    pub step: u64,
    pub value: u8,
}

pub fn probes_to_csv(probes: &[Probe]) -> String {
    let mut s = String::from("step,value\n");
    for p in probes {
        let _ = writeln!(s, "{},{}", p.step, p.value);
    }
    s
}

/// Everything a finished session leaves behind.
#[derive(Clone, Debug)]
pub struct SessionExport {
    pub trace: EpisodeTrace,
    pub probes: Vec<Probe>,
}

impl SessionExport {
    pub fn probes_csv(&self) -> String {
        probes_to_csv(&self.probes)
    }

    /// Writes `<dir>/<id>.csv` (plus its sidecar) and `<dir>/<id>.probes.csv`.
    pub fn write(&self, dir: &Path, id: &str) -> Result<PathBuf, AgentError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{id}.csv"));
        self.trace.write(&path)?;
        std::fs::write(dir.join(format!("{id}.probes.csv")), self.probes_csv())?;
        Ok(path)
    }
}

enum Runner {
    Human(Box<WorldState>),
    Agent(Box<Agent>),
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> String {
    format!("s{:06}", NEXT_ID.fetch_add(1, Ordering::Relaxed))
}

/// Resolves a level name for a session. Only builtin ids are served.
pub fn session_level(name: &str) -> Result<Arc<Level>, SessionError> {
    builtin_level(name).ok_or_else(|| SessionError::UnknownLevel(name.to_string()))
}

pub struct Session {
    pub id: String,
    pub mode: SessionMode,
    pub level: Arc<Level>,
    pub seed: u64,
    /// Agent-observe playback multiplier; 1 in human mode.
    pub speed: f64,
    config: Config,
    runner: Runner,
    agent_cfg: Option<AgentConfig>,
    latched: Option<Input>,
    dropped_inputs: u64,
    pending_probe: Option<u64>,
    probes: Vec<Probe>,
    records: Vec<TraceRecord>,
    outcome: Option<Outcome>,
}

impl Session {
    pub fn create(
        req: &CreateRequest,
        config: &Config,
        library: &Arc<IntentionLibrary>,
    ) -> Result<Session, SessionError> {
        let level = session_level(&req.level)?;
        Self::with_level(level, req, config, library)
    }

    pub fn with_level(
        level: Arc<Level>,
        req: &CreateRequest,
        config: &Config,
        library: &Arc<IntentionLibrary>,
    ) -> Result<Session, SessionError> {
        let invalid = |m: String| SessionError::InvalidConfig(m);
        let (runner, agent_cfg, speed) = match req.mode {
            SessionMode::Human => {
                let world = WorldState::new(level.clone(), &config.env, req.seed);
                (Runner::Human(Box::new(world)), None, 1.0)
            }
            SessionMode::AgentObserve => {
                let mut cfg = if req.no_ccl {
                    AgentConfig::baseline(req.seed)
                } else {
                    AgentConfig {
                        seed: req.seed,
                        ..AgentConfig::default()
                    }
                };
                if let Some(k) = &req.k {
                    cfg.k_mode = k.parse::<KMode>().map_err(invalid)?;
                }
                if let Some(t) = req.ccl_threshold {
                    cfg.ccl_threshold = t;
                }
                cfg.config = config.clone();
                cfg.library = library.clone();
                let agent = Agent::new(level.clone(), &cfg).map_err(|e| invalid(e.to_string()))?;
                let speed = req.speed.unwrap_or(1.0);
                if !(speed > 0.0 && speed <= MAX_SPEED) {
                    return Err(invalid(format!("speed {speed} outside (0, {MAX_SPEED}]")));
                }
                (Runner::Agent(Box::new(agent)), Some(cfg), speed)
            }
        };
        Ok(Session {
            id: fresh_id(),
            mode: req.mode,
            level,
            seed: req.seed,
            speed,
            config: config.clone(),
            runner,
            agent_cfg,
            latched: None,
            dropped_inputs: 0,
            pending_probe: None,
            probes: Vec::new(),
            records: Vec::new(),
            outcome: None,
        })
    }

    fn world(&self) -> &WorldState {
        match &self.runner {
            Runner::Human(w) => w,
            Runner::Agent(a) => &a.world,
        }
    }

    pub fn step_index(&self) -> u64 {
        self.world().step
    }

    /// True once the ship crashed or landed, or the client ended the session.
    pub fn is_ended(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn probes(&self) -> &[Probe] {
        &self.probes
    }

    pub fn pending_probe(&self) -> Option<u64> {
        self.pending_probe
    }

    pub fn dropped_inputs(&self) -> u64 {
        self.dropped_inputs
    }

    pub fn step_interval(&self) -> Duration {
        STEP_INTERVAL.div_f64(self.speed)
    }

    /// The current view without advancing.
    pub fn frame(&self) -> Frame {
        Frame::from_observation(&self.world().observe(), false)
    }

    /// Latches a steering input for the next step. Only the first input per
    /// step is kept; later ones are dropped and `Ok(false)` is returned.
    pub fn submit_input(&mut self, input: Input) -> Result<bool, SessionError> {
        if self.mode != SessionMode::Human {
            return Err(SessionError::WrongMode);
        }
        if self.world().done {
            return Err(SessionError::InputAfterDone);
        }
        if self.is_ended() {
            return Err(SessionError::SessionEnded);
        }
        if self.latched.is_some() {
            self.dropped_inputs += 1;
            return Ok(false);
        }
        self.latched = Some(input);
        Ok(true)
    }

    /// Advances one step. The returned frame requests a probe every
    /// [`PROBE_INTERVAL`] steps and right after a crash.
    pub fn step(&mut self) -> Result<Frame, SessionError> {
        if self.is_ended() {
            return Err(SessionError::SessionEnded);
        }
        let record = match &mut self.runner {
            Runner::Human(world) => {
                let input = self.latched.take().unwrap_or_default();
                let step = world.step;
                world.step(input).map_err(|_| SessionError::SessionEnded)?;
                TraceRecord {
                    step,
                    x: world.ship.x,
                    y: world.ship.y,
                    input,
                    ll_soc: None,
                    hl_soc: None,
                    intention: None,
                    trigger: false,
                    crashed: world.crashed,
                }
            }
            Runner::Agent(agent) => agent.step().map_err(|_| SessionError::SessionEnded)?,
        };
        self.records.push(record);
        let world = self.world();
        let (step, crashed, done) = (world.step, world.crashed, world.done);
        let probe = self.mode == SessionMode::Human && (crashed || step % PROBE_INTERVAL == 0);
        if probe {
            self.pending_probe = Some(step);
        }
        if done {
            self.outcome = Some(if crashed { Outcome::Crashed } else { Outcome::Landed });
        }
        Ok(Frame::from_observation(&self.world().observe(), probe))
    }

    /// Records the answer to the latest probe request. Answers are accepted
    /// after the episode finished, so a post-crash probe can be completed.
    pub fn respond_probe(&mut self, value: i64) -> Result<(), SessionError> {
        if !(1..=7).contains(&value) {
            return Err(SessionError::BadProbeValue(value));
        }
        let step = self.pending_probe.take().ok_or(SessionError::NoProbePending)?;
        self.probes.push(Probe {
            step,
            value: value as u8,
        });
        Ok(())
    }

    /// Ends the session; an unfinished episode is recorded as aborted.
    pub fn end(&mut self) -> Outcome {
        *self.outcome.get_or_insert(Outcome::Aborted)
    }

    pub fn export(&self) -> Result<SessionExport, SessionError> {
        let outcome = self.outcome.ok_or(SessionError::SessionNotEnded)?;
        let meta = match &self.agent_cfg {
            Some(cfg) => TraceMeta::for_agent(&self.level.id, cfg, outcome),
            None => TraceMeta::for_human(&self.level.id, self.seed, &self.config, outcome),
        };
        Ok(SessionExport {
            trace: EpisodeTrace {
                records: self.records.clone(),
                meta,
            },
            probes: self.probes.clone(),
        })
    }
}

/// Protocol state of one client connection, which owns at most one live
/// session at a time. Feed it lines with [`Connection::handle_line`] and
/// call [`Connection::tick`] once per step interval.
pub struct Connection {
    greeted: bool,
    session: Option<Session>,
    config: Config,
    library: Arc<IntentionLibrary>,
    out_dir: Option<PathBuf>,
    exported: Vec<PathBuf>,
}

impl Connection {
    pub fn new(config: Config, library: Arc<IntentionLibrary>, out_dir: Option<PathBuf>) -> Self {
        Self {
            greeted: false,
            session: None,
            config,
            library,
            out_dir,
            exported: Vec::new(),
        }
    }

    pub fn session(&self) -> Option<&Session> {
        self.session.as_ref()
    }

    /// Trace files written so far.
    pub fn exported(&self) -> &[PathBuf] {
        &self.exported
    }

    /// True while a session is running and the transport should tick it.
    pub fn is_running(&self) -> bool {
        self.session.as_ref().is_some_and(|s| !s.is_ended())
    }

    pub fn step_interval(&self) -> Duration {
        self.session.as_ref().map_or(STEP_INTERVAL, Session::step_interval)
    }

    pub fn handle_line(&mut self, line: &str) -> Vec<ServerMessage> {
        if line.trim().is_empty() {
            return Vec::new();
        }
        match parse_client_message(line) {
            Ok(msg) => self.handle(msg),
            Err(e) => vec![ServerMessage::error(ErrorCode::BadMessage, e)],
        }
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        if let ClientMessage::Hello { proto } = msg {
            if proto != PROTOCOL_VERSION {
                return vec![ServerMessage::error(
                    ErrorCode::UnsupportedProto,
                    format!("protocol {proto} not supported, expected {PROTOCOL_VERSION}"),
                )];
            }
            self.greeted = true;
            return vec![ServerMessage::Hello { proto: PROTOCOL_VERSION }];
        }
        if !self.greeted {
            return vec![ServerMessage::error(ErrorCode::HandshakeRequired, "send hello first")];
        }
        match msg {
            ClientMessage::Hello { .. } => unreachable!(),
            ClientMessage::Create(req) => {
                if self.is_running() {
                    return vec![ServerMessage::error(ErrorCode::SessionActive, "a session is already running")];
                }
                match Session::create(&req, &self.config, &self.library) {
                    Ok(s) => {
                        let frame = s.frame();
                        self.session = Some(s);
                        vec![ServerMessage::Frame(frame)]
                    }
                    Err(e) => vec![e.to_message()],
                }
            }
            ClientMessage::Input { dir } => match self.session.as_mut() {
                None => vec![no_session()],
                Some(s) => match s.submit_input(dir.into()) {
                    Ok(_) => Vec::new(),
                    Err(e) => vec![e.to_message()],
                },
            },
            ClientMessage::ProbeResponse { value } => match self.session.as_mut() {
                None => vec![no_session()],
                Some(s) => match s.respond_probe(value) {
                    Ok(()) => Vec::new(),
                    Err(e) => vec![e.to_message()],
                },
            },
            ClientMessage::End => match self.session.as_mut() {
                None => vec![no_session()],
                Some(s) if s.is_ended() => vec![SessionError::SessionEnded.to_message()],
                Some(s) => {
                    let outcome = s.end();
                    let mut out = self.flush();
                    out.push(ServerMessage::Ended { outcome: outcome.to_string() });
                    out
                }
            },
        }
    }

    /// Advances the running session by one step.
    pub fn tick(&mut self) -> Vec<ServerMessage> {
        let Some(s) = self.session.as_mut().filter(|s| !s.is_ended()) else {
            return Vec::new();
        };
        let mut out = match s.step() {
            Ok(frame) => vec![ServerMessage::Frame(frame)],
            Err(e) => return vec![e.to_message()],
        };
        if let Some(outcome) = s.outcome() {
            out.extend(self.flush());
            out.push(ServerMessage::Ended { outcome: outcome.to_string() });
        }
        out
    }

    fn flush(&mut self) -> Vec<ServerMessage> {
        let (Some(dir), Some(s)) = (&self.out_dir, &self.session) else {
            return Vec::new();
        };
        let written = s.export().map_err(|e| e.to_string()).and_then(|x| {
            x.write(dir, &format!("{}__{}", s.id, s.level.id))
                .map_err(|e| e.to_string())
        });
        match written {
            Ok(path) => {
                self.exported.push(path);
                Vec::new()
            }
            Err(e) => {
                log_error(&e);
                Vec::new()
            }
        }
    }

    /// Trace of the last session, once it has ended.
    pub fn export(&self) -> Result<SessionExport, SessionError> {
        self.session
            .as_ref()
            .ok_or(SessionError::SessionNotEnded)?
            .export()
    }
}

fn no_session() -> ServerMessage {
    ServerMessage::error(ErrorCode::NoSession, "no session; send create first")
}

fn log_error(message: &str) {
    eprintln!("session: failed to write trace: {message}");
}
