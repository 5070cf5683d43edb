//! Moonlander-style task simulator with a two-layer sense-of-control agent,
//! an experiment harness and a session service for human play.

pub mod agent;
pub mod ccl;
pub mod config;
pub mod environment;
pub mod harness;
pub mod prob;
pub mod scl;
pub mod session;
