//! Intention library: which action intentions apply to which situation, with
//! predetermined reliabilities.
//!
//! File format, one entry per line:
//!
//! ```text
//! intent <situation-id> <target_region> <reliability> [bias <real>]
//! ```
//!
//! A situation id is `zone/obstacle/corridor`; any component may be `*`.
//! The most specific matching pattern wins (fewest wildcards, then file
//! order). The pattern `default` is used when nothing matches. Without
//! `bias`, an intention compensates for a marked zone by its visible drift.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::situation::Situation;

pub const DEFAULT_LIBRARY: &str = include_str!("../../data/intentions.txt");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TargetRegion {
    FarLeft,
    Left,
    Center,
    Right,
    FarRight,
}

impl TargetRegion {
    pub const ALL: [TargetRegion; 5] = [
        TargetRegion::FarLeft,
        TargetRegion::Left,
        TargetRegion::Center,
        TargetRegion::Right,
        TargetRegion::FarRight,
    ];

    /// Region centre as a fraction of the corridor width.
    pub fn fraction(self) -> f64 {
        match self {
            TargetRegion::FarLeft => 0.1,
            TargetRegion::Left => 0.3,
            TargetRegion::Center => 0.5,
            TargetRegion::Right => 0.7,
            TargetRegion::FarRight => 0.9,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TargetRegion::FarLeft => "far_left",
            TargetRegion::Left => "left",
            TargetRegion::Center => "center",
            TargetRegion::Right => "right",
            TargetRegion::FarRight => "far_right",
        }
    }
}

impl fmt::Display for TargetRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetRegion {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        TargetRegion::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BiasSpec {
    /// Negated drift of the visible marked zone.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionIntention {
    pub target_region: TargetRegion,
    pub bias: BiasSpec,
    pub reliability: f64,
    pub tried: bool,
}

impl ActionIntention {
    pub fn new(target_region: TargetRegion, reliability: f64) -> Self {
        Self {
            target_region,
            bias: BiasSpec::Auto,
            reliability,
            tried: false,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LibraryError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq)]
struct Pattern {
    text: String,
    parts: Option<[String; 3]>,
}

impl Pattern {
    fn parse(text: &str) -> Option<Self> {
        if text == "default" {
            return Some(Self { text: text.into(), parts: None });
        }
        let parts: Vec<&str> = text.split('/').collect();
        if parts.len() != 3 || parts.iter().any(|p| p.is_empty()) {
            return None;
        }
        Some(Self {
            text: text.into(),
            parts: Some([parts[0].into(), parts[1].into(), parts[2].into()]),
        })
    }

    fn wildcards(&self) -> usize {
        self.parts
            .as_ref()
            .map_or(usize::MAX, |p| p.iter().filter(|s| *s == "*").count())
    }

    fn matches(&self, sit: &Situation) -> bool {
        match &self.parts {
            None => false,
            Some(parts) => parts
                .iter()
                .zip(sit.fields())
                .all(|(p, f)| p == "*" || p == f),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntentionLibrary {
    entries: Vec<(Pattern, ActionIntention)>,
}

impl Default for IntentionLibrary {
    fn default() -> Self {
        Self::parse(DEFAULT_LIBRARY).expect("default library parses")
    }
}

impl IntentionLibrary {
    pub fn parse(text: &str) -> Result<Self, LibraryError> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |m: &str| LibraryError::Parse { line, message: m.to_string() };
            let t: Vec<&str> = content.split_whitespace().collect();
            if t[0] != "intent" || !(t.len() == 4 || t.len() == 6) {
                return Err(err("expected `intent <situation> <region> <reliability> [bias <real>]`"));
            }
            let pattern = Pattern::parse(t[1]).ok_or_else(|| err("bad situation id"))?;
            let region: TargetRegion = t[2].parse().map_err(|_| err("unknown target region"))?;
            let reliability: f64 = t[3]
                .parse()
                .ok()
                .filter(|r| (0.0..=1.0).contains(r))
                .ok_or_else(|| err("reliability must be a number in [0, 1]"))?;
            let bias = if t.len() == 6 {
                if t[4] != "bias" {
                    return Err(err("expected `bias <real>`"));
                }
                BiasSpec::Fixed(
                    t[5].parse::<f64>()
                        .ok()
                        .filter(|b| b.is_finite())
                        .ok_or_else(|| err("bias must be a number"))?,
                )
            } else {
                BiasSpec::Auto
            };
            entries.push((
                pattern,
                ActionIntention {
                    target_region: region,
                    bias,
                    reliability,
                    tried: false,
                },
            ));
        }
        if !entries.iter().any(|(p, _)| p.parts.is_none()) {
            entries.push((
                Pattern::parse("default").expect("literal"),
                ActionIntention::new(TargetRegion::Center, 1.0),
            ));
        }
        Ok(Self { entries })
    }

    /// Intentions of the best-matching entry, in file order.
    pub fn lookup(&self, sit: &Situation) -> Vec<ActionIntention> {
        let best = self
            .entries
            .iter()
            .filter(|(p, _)| p.matches(sit))
            .min_by_key(|(p, _)| p.wildcards())
            .map(|(p, _)| p.text.clone())
            .unwrap_or_else(|| "default".to_string());
        self.entries
            .iter()
            .filter(|(p, _)| p.text == best)
            .map(|(_, i)| *i)
            .collect()
    }

    pub fn default_intentions(&self) -> Vec<ActionIntention> {
        self.entries
            .iter()
            .filter(|(p, _)| p.parts.is_none())
            .map(|(_, i)| *i)
            .collect()
    }
}
