use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use qsaf_cli::config::Options;
use qsaf_cli::experiments::{self, Command};

/// Quantum state assignment flows on graphs.
#[derive(Parser)]
#[command(name = "qsaf", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    #[command(flatten)]
    options: Options,
}

fn run(cli: Cli) -> Result<bool> {
    let opts = cli.options.resolve()?;
    if let Some(n) = opts.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let report = experiments::run(cli.command, &opts)?;
    println!(
        "{}: {} after {} iterations, max purity gap {:e}",
        report.command,
        if report.converged { "converged" } else { "not converged" },
        report.iterations,
        report.final_purity_gap_max
    );
    println!("report written to {}", opts.out_dir().join(qsaf_cli::report::REPORT_FILE).display());
    Ok(report.converged || opts.allow_partial)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: run did not converge (pass --allow-partial to accept partial results)");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
