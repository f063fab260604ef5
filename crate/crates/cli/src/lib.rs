//! Scenario runner for the fiskit toolkit: expression parsing, scenario loading,
//! task dispatch and JSON reports.

pub mod error;
pub mod expr;
pub mod oracle;
pub mod report;
pub mod scenario;
pub mod tasks;

pub use error::{CliError, Pos};
pub use report::{run_scenario, Report, RunOptions};
