//! Library surface of the `beamsel` command-line tool (kept separate so the
//! config and execution layers are directly testable).

pub mod commands;
pub mod config;
