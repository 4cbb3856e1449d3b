//! Sweep orchestration and report emission (CSV/JSON/SVG) behind the
//! command-line front end.

pub mod commands;
pub mod config;
pub mod svg;
