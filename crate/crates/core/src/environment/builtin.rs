//! The six evaluation situations, shipped as level files.

use std::sync::Arc;

use super::{EnvError, Level};

pub const BUILTIN_IDS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

const SOURCES: [&str; 6] = [
    include_str!("../../levels/a.lvl"),
    include_str!("../../levels/b.lvl"),
    include_str!("../../levels/c.lvl"),
    include_str!("../../levels/d.lvl"),
    include_str!("../../levels/e.lvl"),
    include_str!("../../levels/f.lvl"),
];

/// Source text of a builtin level file.
pub fn builtin_source(id: &str) -> Option<&'static str> {
    BUILTIN_IDS.iter().position(|b| *b == id).map(|i| SOURCES[i])
}

pub fn builtin_level(id: &str) -> Option<Arc<Level>> {
    builtin_source(id).map(|src| Arc::new(Level::parse(src).expect("builtin level parses")))
}

/// Levels (a) through (f), in order.
pub fn builtin_levels() -> Vec<Arc<Level>> {
    BUILTIN_IDS
        .iter()
        .map(|id| builtin_level(id).expect("builtin id"))
        .collect()
}

/// Loads a level from a builtin id or a file path.
pub fn load_level_arg(arg: &str) -> Result<Arc<Level>, LoadError> {
    if let Some(level) = builtin_level(arg) {
        return Ok(level);
    }
    let text = std::fs::read_to_string(arg).map_err(|e| LoadError::Io(arg.to_string(), e.to_string()))?;
    Ok(Arc::new(Level::parse(&text)?))
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read level `{0}`: {1}")]
    Io(String, String),
    #[error(transparent)]
    Level(#[from] EnvError),
}
