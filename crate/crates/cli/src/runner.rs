//! Executes a validated config and writes its report.

use crate::config::{OutputFormat, RunConfig};
use crate::output::{rows, write_csv, write_json_lines, Meta};
use crate::registry::find;
use hgibbs::experiments::ExperimentReport;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

/// Overrides the default output directory `results/`.
pub const OUTPUT_DIR_ENV: &str = "HGIBBS_OUTPUT_DIR";

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum RunError {
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("experiment failed: {0}")]
    Experiment(#[from] hgibbs::Error),
    #[error("cannot build thread pool: {0}")]
    ThreadPool(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub struct Outcome {
    pub report: ExperimentReport,
    pub path: PathBuf,
    pub wall_seconds: f64,
}

pub fn output_path(cfg: &RunConfig) -> PathBuf {
    if let Some(p) = &cfg.output_path {
        return p.clone();
    }
    let dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("results"));
    dir.join(format!("{}_seed{}.{}", cfg.experiment, cfg.seed, cfg.output_format.extension()))
}

/// Sidecar holding the wall time, so the report itself stays byte-identical
/// across reruns.
pub fn timing_path(report: &Path) -> PathBuf {
    let mut s = report.as_os_str().to_owned();
    s.push(".timing.json");
    PathBuf::from(s)
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let exp = find(&cfg.experiment).ok_or_else(|| RunError::UnknownExperiment(cfg.experiment.clone()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build().map_err(|e| RunError::ThreadPool(e.to_string()))?;
    let start = Instant::now();
    let report = pool.install(|| (exp.run)(&cfg.params, cfg.seed))?;
    let wall_seconds = start.elapsed().as_secs_f64();

    let path = output_path(cfg);
    let io = |source| RunError::Io { path: path.clone(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let table = rows(&report, &Meta { version: VERSION, seed: cfg.seed, threads: cfg.threads });
    let file = BufWriter::new(File::create(&path).map_err(io)?);
    match cfg.output_format {
        OutputFormat::JsonLines => write_json_lines(&table, file),
        OutputFormat::Csv => write_csv(&table, file),
    }
    .map_err(io)?;
    let timing = serde_json::json!({ "experiment": cfg.experiment, "seed": cfg.seed, "threads": cfg.threads, "wall_seconds": wall_seconds });
    let tpath = timing_path(&path);
    fs::write(&tpath, format!("{timing}\n")).map_err(|source| RunError::Io { path: tpath, source })?;
    Ok(Outcome { report, path, wall_seconds })
}

/// Exit code: 0 when every check passes, 1 when any fails, 2 on error.
pub fn run(cfg: &RunConfig) -> i32 {
    match execute(cfg) {
        Ok(o) => {
            eprintln!("{}: wrote {} ({:.2} s wall)", cfg.experiment, o.path.display(), o.wall_seconds);
            for c in o.report.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {} ({})", c.label, c.detail);
            }
            if o.report.all_passed() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
