//! Experiment drivers. Each writes its artifacts into the output directory
//! and returns the run report.

pub mod bloch;
pub mod patch;
pub mod potential;
pub mod restrict;
pub mod single_vertex;

use std::time::Instant;

use anyhow::{Context, Result};
use clap::ValueEnum;

use crate::config::Options;
use crate::report::{write_report, RunReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    SingleVertex,
    BlochDenoise,
    PatchSmooth,
    RestrictCheck,
    PotentialTrace,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::SingleVertex => "single-vertex",
            Self::BlochDenoise => "bloch-denoise",
            Self::PatchSmooth => "patch-smooth",
            Self::RestrictCheck => "restrict-check",
            Self::PotentialTrace => "potential-trace",
        }
    }
}

/// Runs `command`, then writes `report.json` and `timing.json`.
pub fn run(command: Command, opts: &Options) -> Result<RunReport> {
    let dir = opts.out_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let start = Instant::now();
    let report = match command {
        Command::SingleVertex => single_vertex::run(opts, &dir),
        Command::BlochDenoise => bloch::run(opts, &dir),
        Command::PatchSmooth => patch::run(opts, &dir),
        Command::RestrictCheck => restrict::run(opts, &dir),
        Command::PotentialTrace => potential::run(opts, &dir),
    }
    .with_context(|| format!("{} failed", command.name()))?;
    write_report(&dir, &report, start.elapsed())?;
    Ok(report)
}
