//! Command-line front end: configuration files, the scenario catalogue and
//! artifact output (CSV, SVG, `summary.txt`).

pub mod app;
pub mod config;
pub mod output;
pub mod plot;
pub mod scenario;

pub use app::{analyze, load_config, main_with_args, simulate, sweep};
pub use config::{ConfigError, ScenarioName, Settings};
pub use scenario::{run_scenario, Report, RunError};
