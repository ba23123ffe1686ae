//! Scenario runner behind the `relspec` binary: TOML configs, the seven
//! scenario kinds, and CSV / JSON reports.

pub mod config;
pub mod report;
pub mod scenarios;

pub use config::{ConfigError, ScenarioConfig, ScenarioKind};
pub use report::{Check, Report, Status, Table};
pub use scenarios::{family_member, run_scenario};
