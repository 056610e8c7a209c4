//! Command-line front end for the `memtol` models and simulator.
//!
//! Subcommands evaluate model variants (`model`), simulate (`sim`), put both
//! side by side (`sweep`), report model error against the simulator
//! (`compare`) and compute cost-performance ratios (`cpr`). Parameters come
//! from a JSON [`config::RunConfig`] overridden by flags; grid points run in
//! parallel and are written in grid order.

pub mod args;
pub mod axis;
pub mod config;
pub mod error;
pub mod grid;
pub mod report;
pub mod run;

pub use error::{CliError, Result};
