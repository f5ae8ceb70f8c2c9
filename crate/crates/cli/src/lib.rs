//! Configuration-driven runner for the rrtlevels verification suites.
//!
//! A run resolves an [`ExperimentConfig`] into [`Settings`], fans the
//! replicates of the chosen suite over a thread pool, and writes a
//! per-replicate CSV, a JSON summary of test reports and optional SVG plots.

pub mod config;
mod engine;
pub mod suites;
mod svg;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rrtlevels::stat_verify::TestReport;
use serde::Serialize;

pub use config::{ExperimentConfig, KSchedule, Settings, Threads, OUT_DIR_ENV};
pub use suites::Suite;

/// Header of every per-replicate CSV.
pub const CSV_HEADER: [&str; 6] = ["replicate_index", "n", "k_or_m", "u", "raw_value", "normalized_value"];

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error("{suite}: {source}")]
    Resource {
        suite: String,
        #[source]
        source: rrtlevels::Error,
    },
    #[error("{suite}: {source}")]
    Compute {
        suite: String,
        #[source]
        source: rrtlevels::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub(crate) fn core(suite: Suite, err: rrtlevels::Error) -> Self {
        let suite = suite.name().to_string();
        if err.is_resource() {
            RunError::Resource { suite, source: err }
        } else {
            RunError::Compute { suite, source: err }
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration and argument problems, 3 for resource budgets
    /// and output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Compute { .. } => 2,
            RunError::Resource { .. } | RunError::Io { .. } => 3,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub settings: Settings,
    pub reports: Vec<TestReport>,
    pub csv_path: PathBuf,
    pub csv_rows: u64,
    pub summary_path: PathBuf,
    pub plot_paths: Vec<PathBuf>,
    pub elapsed: Duration,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }

    /// 0 when every report passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    suite: &'a str,
    passed: bool,
    elapsed_seconds: f64,
    csv_rows: u64,
    settings: &'a Settings,
    reports: &'a [TestReport],
    diagnostics: &'a serde_json::Value,
}

/// Runs one suite and writes its artifacts under `settings.out_dir`.
pub fn run(settings: &Settings) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    std::fs::create_dir_all(&settings.out_dir).map_err(|e| RunError::io(&settings.out_dir, e))?;
    let engine = engine::Engine::new(settings)?;
    let csv_path = settings.csv_path();
    let mut sink = engine::CsvSink::create(&csv_path)?;
    log::info!(
        "running {} with {} replicates on {} threads",
        settings.suite.name(),
        settings.replicates,
        settings.threads
    );
    let result = suites::execute(settings, &engine, &mut sink)?;
    let csv_rows = sink.finish()?;

    let mut plot_paths = Vec::new();
    if settings.plots {
        for plot in &result.plots {
            let path = settings
                .out_dir
                .join(format!("{}.{}.svg", settings.suite.name(), plot.name));
            std::fs::write(&path, &plot.svg).map_err(|e| RunError::io(&path, e))?;
            plot_paths.push(path);
        }
    }

    let elapsed = start.elapsed();
    let summary_path = settings.summary_path();
    let summary = Summary {
        suite: settings.suite.name(),
        passed: result.reports.iter().all(|r| r.passed),
        elapsed_seconds: elapsed.as_secs_f64(),
        csv_rows,
        settings,
        reports: &result.reports,
        diagnostics: &result.diagnostics,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&summary_path, json + "\n").map_err(|e| RunError::io(&summary_path, e))?;

    Ok(RunOutcome {
        settings: settings.clone(),
        reports: result.reports,
        csv_path,
        csv_rows,
        summary_path,
        plot_paths,
        elapsed,
    })
}
