//! Experiment plumbing: configs, seeded runs, CSV traces, ensembles,
//! bound checks and SVG plots.

mod bench;
mod check;
mod config;
mod run;
mod svg;
mod trace;

pub use bench::{aggregate, bench, nearest_rank, seed_stream, Aggregate, AggregateRow, Ensemble, AGGREGATE_HEADER};
pub use check::{check, CheckReport};
pub use config::{MethodKind, ProblemKind, RunConfig};
pub use run::{build_problem, default_bound, run, Experiment};
pub use svg::{render_svg, validate_svg, Curve, SvgSummary};
pub use trace::{fmt_f64, sidecar_path, Sidecar, Trace, TraceRow, ValueKind, TRACE_HEADER};

use std::path::Path;

use thiserror::Error;

use crate::identities::CheckResult;
use crate::optimizers::OptimError;
use crate::problems::ProblemError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error("{method} needs constants that are not declared: {}", .missing.join(", "))]
    MissingConstants { method: String, missing: Vec<&'static str> },
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("step {step}: {source}")]
    Step {
        step: u64,
        #[source]
        source: OptimError,
    },
    #[error("seed index {index} (key {seed}): {source}")]
    Seed {
        index: usize,
        seed: u64,
        #[source]
        source: Box<HarnessError>,
    },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("svg: {0}")]
    Svg(String),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        }
    }

    /// 2 for bad input (config, constants, files that do not parse),
    /// 3 for failures while running or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } | HarnessError::MissingConstants { .. } | HarnessError::Csv { .. } => 2,
            HarnessError::Optim(OptimError::MissingConstants(_) | OptimError::Invalid(_)) => 2,
            HarnessError::Problem(ProblemError::Io(_)) => 3,
            HarnessError::Problem(_) => 2,
            HarnessError::Io { .. } | HarnessError::Step { .. } | HarnessError::Seed { .. } => 3,
            HarnessError::Optim(_) | HarnessError::Svg(_) => 3,
        }
    }
}

/// Runs every identity suite and renders the table; the flag is true when
/// all rows pass.
pub fn props_report() -> (String, bool) {
    let rows: Vec<CheckResult> = crate::identities::run_all();
    let mut out = String::new();
    for r in &rows {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    let failed = rows.iter().filter(|r| !r.passed()).count();
    out.push_str(&format!("{} checks, {} failed\n", rows.len(), failed));
    (out, failed == 0)
}
