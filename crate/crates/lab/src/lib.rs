//! Scenario runner for the counting-statistics simulator: TOML configs,
//! parameter sweeps, CSV/JSON results and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod output;
pub mod scenario;
pub mod sweep;

pub use config::{LoadedConfig, ScenarioKind};
pub use error::{exit, LabError};
pub use sweep::{ResultRow, RunResult};
