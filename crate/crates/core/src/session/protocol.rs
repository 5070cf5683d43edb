//! Wire messages. One JSON object per line, tagged by `type`. Unknown
//! fields are ignored on input.

use serde::{Deserialize, Serialize};

use crate::environment::{Input, Observation};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dir {
    Left,
    Right,
    None,
}

impl From<Dir> for Input {
    fn from(d: Dir) -> Input {
        match d {
            Dir::Left => Input::Left,
            Dir::Right => Input::Right,
            Dir::None => Input::None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionMode {
    #[default]
    #[serde(rename = "human")]
    Human,
    #[serde(rename = "agent-observe", alias = "agent_observe")]
    AgentObserve,
}

/// Parameters of a `create` message.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreateRequest {
    pub level: String,
    #[serde(default)]
    pub mode: SessionMode,
    #[serde(default)]
    pub seed: u64,
    /// Agent-observe only: `"dynamic"` or a number in [0, 1].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ccl_threshold: Option<f64>,
    #[serde(default)]
    pub no_ccl: bool,
    /// Agent-observe playback speed multiplier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
}

impl CreateRequest {
    pub fn human(level: &str, seed: u64) -> Self {
        Self {
            level: level.to_string(),
            mode: SessionMode::Human,
            seed,
            k: None,
            ccl_threshold: None,
            no_ccl: false,
            speed: None,
        }
    }

    pub fn agent(level: &str, seed: u64) -> Self {
        Self {
            mode: SessionMode::AgentObserve,
            ..Self::human(level, seed)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Hello { proto: u32 },
    Create(CreateRequest),
    Input { dir: Dir },
    ProbeResponse { value: i64 },
    End,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadMessage,
    HandshakeRequired,
    UnsupportedProto,
    NoSession,
    SessionActive,
    UnknownLevel,
    InvalidConfig,
    WrongMode,
    SessionEnded,
    InputAfterDone,
    SessionNotEnded,
    NoProbePending,
    BadProbeValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneMarker {
    pub kind: String,
    pub y_top: f64,
    pub y_bottom: f64,
}

/// What a client is shown after each step. Only marked zones are ever
/// included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub step: u64,
    pub ship: [f64; 2],
    /// `[y, left_x, right_x]` border points.
    pub borders: Vec<[f64; 3]>,
    /// `[x_left, x_right, y_top, y_bottom]`.
    pub obstacles: Vec<[f64; 4]>,
    pub marked_zones: Vec<ZoneMarker>,
    pub done: bool,
    pub crashed: bool,
    pub probe: bool,
}

impl Frame {
    pub fn from_observation(obs: &Observation, probe: bool) -> Self {
        Self {
            step: obs.step,
            ship: [obs.ship_x, obs.ship_y],
            borders: obs
                .visible_borders
                .iter()
                .map(|b| [b.y, b.left_x, b.right_x])
                .collect(),
            obstacles: obs
                .visible_obstacles
                .iter()
                .map(|o| [o.x_left, o.x_right, o.y_top, o.y_bottom])
                .collect(),
            marked_zones: obs
                .marked_zones
                .iter()
                .filter(|z| z.kind.is_marked())
                .map(|z| ZoneMarker {
                    kind: z.kind.as_str().to_string(),
                    y_top: z.y_top,
                    y_bottom: z.y_bottom,
                })
                .collect(),
            done: obs.done,
            crashed: obs.crashed,
            probe,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello { proto: u32 },
    Frame(Frame),
    Ended { outcome: String },
    Error { code: ErrorCode, message: String },
}

impl ServerMessage {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        ServerMessage::Error {
            code,
            message: message.into(),
        }
    }

    /// One NDJSON line without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}

pub fn parse_client_message(line: &str) -> Result<ClientMessage, String> {
    serde_json::from_str(line.trim()).map_err(|e| e.to_string())
}
