//! Scenario configs, their runs, and the reports behind the command line.

pub mod config;
pub mod report;
pub mod run;

pub use config::{parse_config, BackendKind, ConfigError, ScenarioConfig};
pub use report::{to_json, Check, Report};
pub use run::{plot_data, run_catalog, run_config, run_instance, Artifacts, Overrides, TolPolicy};
