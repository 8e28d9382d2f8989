//! Scenario files, experiment runners and `summary.txt` reports.

pub mod config;
pub mod report;
pub mod scenarios;
pub mod selftest;

pub use config::{ScenarioConfig, ScenarioKind};
pub use report::{Check, Relation, ScenarioReport};
pub use scenarios::{audit_trajectory, run_scenario};
pub use selftest::{selftest, weight_identity_violations};
