//! Experiment drivers and file formats for the `qsaf` command.

pub mod config;
pub mod experiments;
pub mod io;
pub mod report;
pub mod synthetic;
