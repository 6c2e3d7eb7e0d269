//! Run reports. `report.json` holds only reproducible content; wall time goes
//! to `timing.json`.

use std::path::Path;
use std::time::Duration;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::io::write_json;

pub const REPORT_FILE: &str = "report.json";
pub const TIMING_FILE: &str = "timing.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub converged: bool,
    pub iterations: usize,
    pub final_purity_gap_max: f64,
    /// File name of the per-iteration diagnostics, relative to the report.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<String>,
    /// Resolved settings of the run.
    pub config: Value,
    /// Command-specific results.
    pub details: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_time_seconds: f64,
}

pub fn write_report(dir: &Path, report: &RunReport, elapsed: Duration) -> Result<()> {
    write_json(&dir.join(REPORT_FILE), report)?;
    write_json(
        &dir.join(TIMING_FILE),
        &Timing {
            wall_time_seconds: elapsed.as_secs_f64(),
        },
    )
}
