//! Command-line front end for `spheremetric`.
//!
//! Exit codes: 0 success, 1 I/O or output failure, 2 bad arguments or
//! configuration, 3 dataset error, 4 feature backend error, 5 numeric
//! failure, 6 replay mismatch.

pub mod args;
pub mod commands;
pub mod config;
pub mod replay;
pub mod report;

use std::path::Path;

use spheremetric::ErrorKind;

pub use commands::execute;
pub use config::{CommandKind, OutputFormat, RunConfig};
pub use report::MetricReport;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] spheremetric::Error),
    #[error("{0}")]
    Usage(String),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("output: {0}")]
    Output(String),
    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Input => 2,
                ErrorKind::Dataset => 3,
                ErrorKind::Backend => 4,
                ErrorKind::Numeric => 5,
                ErrorKind::Io => 1,
            },
            CliError::Usage(_) => 2,
            CliError::Json(_) | CliError::Csv(_) | CliError::Io(_) | CliError::Output(_) => 1,
            CliError::ReplayMismatch(_) => 6,
        }
    }
}

/// Writes a metric report as configured: JSON or CSV to `--out`, or to
/// stdout when no path is given. CSV output with a path also gets the full
/// JSON report next to it.
pub fn emit(report: &MetricReport) -> Result<(), CliError> {
    let cfg = &report.config;
    let main = match cfg.format {
        OutputFormat::Json => report.to_json()?,
        OutputFormat::Csv => report.to_csv()?,
    };
    match cfg.out.as_deref() {
        Some(path) => {
            report::write_atomic(path, &main)?;
            if cfg.format == OutputFormat::Csv {
                report::write_atomic(&report::companion_json_path(path), &report.to_json()?)?;
            }
        }
        None => print!("{main}"),
    }
    Ok(())
}

/// Executes a configuration and emits its report. Generating commands
/// print a one-line summary instead.
pub fn run(cfg: &RunConfig) -> Result<MetricReport, CliError> {
    let report = execute(cfg)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    if commands::is_generator(cfg.command) {
        let out = cfg.out.as_deref().unwrap_or(Path::new("."));
        println!(
            "{}: wrote {} outputs under {}",
            cfg.command.as_str(),
            report.results.outputs.len(),
            out.display()
        );
    } else {
        emit(&report)?;
    }
    Ok(report)
}
