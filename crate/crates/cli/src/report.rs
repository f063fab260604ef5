//! Running scenarios and the report document.

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;
use crate::scenario::{build_context, validate, Scenario};
use crate::tasks::{run_task, Status};

pub const REPORT_SCHEMA: &str = "fiskit-report/1";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub resolution: Option<usize>,
    pub dump_matrices: Option<PathBuf>,
    /// Wall-clock timings make reports differ between runs, so they are opt-in.
    pub timings: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskReport {
    pub index: usize,
    pub kind: String,
    pub status: Status,
    pub details: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: String,
    pub scenario: String,
    pub seed: u64,
    pub resolution: usize,
    pub passed: bool,
    pub tasks: Vec<TaskReport>,
}

impl Report {
    pub fn to_json(&self) -> String {
        // Round trip through Value so every object's keys come out sorted.
        let v = serde_json::to_value(self).expect("report is plain data");
        let mut s = serde_json::to_string_pretty(&v).expect("report is plain data");
        s.push('\n');
        s
    }
}

/// Validates, builds the shared context and runs every task in order.
pub fn run_scenario(sc: &Scenario, opts: &RunOptions) -> Result<Report, CliError> {
    let resolution = opts.resolution.unwrap_or(sc.resolution);
    if resolution < 2 {
        return Err(CliError::Validation(format!("resolution {resolution} is below 2")));
    }
    let seed = opts.seed.unwrap_or(sc.seed);
    validate(sc, resolution)?;
    let ctx = build_context(sc, resolution, seed)?;
    let mut tasks = Vec::with_capacity(sc.tasks.len());
    for (index, task) in sc.tasks.iter().enumerate() {
        let start = Instant::now();
        let (status, details, error) = match run_task(&ctx, index, task, opts.dump_matrices.as_deref()) {
            Ok(out) => (out.status, out.details, None),
            Err(e) => (Status::Error, Value::Null, Some(e.to_string())),
        };
        tasks.push(TaskReport {
            index,
            kind: task.kind().to_string(),
            status,
            details,
            error,
            seconds: opts.timings.then(|| start.elapsed().as_secs_f64()),
        });
    }
    let passed = tasks.iter().all(|t| matches!(t.status, Status::Pass | Status::Info));
    Ok(Report { schema: REPORT_SCHEMA.into(), scenario: sc.name.clone(), seed, resolution, passed, tasks })
}
