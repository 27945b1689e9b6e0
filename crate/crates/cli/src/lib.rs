//! Config-driven experiment runner for multi-specialist diagnosis.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;

pub use commands::{cmd_compare, cmd_fixture, cmd_ppa, cmd_run};
pub use config::{FusionMethod, Overrides, RunConfig};
pub use error::{CliError, Stage};
pub use pipeline::{RunOutcome, Session};
