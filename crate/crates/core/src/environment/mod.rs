//! The Moonlander task world.

mod builtin;
mod level;
mod world;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use builtin::{builtin_level, builtin_levels, builtin_source, load_level_arg, LoadError, BUILTIN_IDS};
pub use level::{corridor_at, BorderPoint, DisturbanceZone, Level, Obstacle, ZoneKind};
pub use world::{crash_check, MarkedZone, Observation, Ship, WorldState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid `{field}`: {message}")]
    InvariantViolation { field: String, message: String },
    #[error("episode already finished")]
    SteppedAfterDone,
}

/// One steering input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Input {
    Left,
    Right,
    #[default]
    None,
}

impl Input {
    /// -1, 0 or +1.
    pub fn direction(self) -> f64 {
        match self {
            Input::Left => -1.0,
            Input::Right => 1.0,
            Input::None => 0.0,
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Input::Left => -1,
            Input::Right => 1,
            Input::None => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Input::Left => "left",
            Input::Right => "right",
            Input::None => "none",
        }
    }
}

impl fmt::Display for Input {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Input {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "left" => Ok(Input::Left),
            "right" => Ok(Input::Right),
            "none" => Ok(Input::None),
            other => Err(format!("unknown input `{other}`")),
        }
    }
}
