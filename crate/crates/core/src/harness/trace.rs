use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::optimizers::{BoundConstants, BoundKind};

pub const TRACE_HEADER: &str = "step,grad_evals,f_gap,bound";

/// What the `f_gap` column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ValueKind {
    /// `f(x) − f*`, or the duality gap for dual averaging.
    #[default]
    Gap,
    /// Raw objective values; the optimum is unknown.
    Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub grad_evals: u64,
    pub f_gap: f64,
    pub bound: Option<f64>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl TraceRow {
    pub fn new(step: u64, grad_evals: u64, f_gap: f64) -> Self {
        Self {
            step,
            grad_evals,
            f_gap,
            bound: None,
            diagnostics: BTreeMap::new(),
        }
    }
}

/// Checkpointed run output. Only `step`, `grad_evals`, `f_gap` and `bound`
/// go to CSV; the remaining metadata goes to the constants sidecar.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub value_kind: ValueKind,
    pub bound: Option<BoundKind>,
    pub bound_constants: BoundConstants,
    pub problem_constants: Vec<(&'static str, f64)>,
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v}")
    }
}

pub(crate) fn parse_f64(s: &str, line: usize, col: &str) -> Result<f64, HarnessError> {
    s.trim().parse().map_err(|_| HarnessError::Csv {
        line,
        msg: format!("{col}: {s:?} is not a number"),
    })
}

fn parse_u64(s: &str, line: usize, col: &str) -> Result<u64, HarnessError> {
    s.trim().parse().map_err(|_| HarnessError::Csv {
        line,
        msg: format!("{col}: {s:?} is not a nonnegative integer"),
    })
}

impl Trace {
    /// Steps strictly increase and gradient counts never decrease.
    pub fn validate(&self) -> Result<(), String> {
        for w in self.rows.windows(2) {
            if w[1].step <= w[0].step {
                return Err(format!("step {} follows step {}", w[1].step, w[0].step));
            }
            if w[1].grad_evals < w[0].grad_evals {
                return Err(format!("grad_evals decreases at step {}", w[1].step));
            }
        }
        Ok(())
    }

    pub fn final_row(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.rows.len() + 1));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let bound = r.bound.map_or_else(|| "nan".to_string(), fmt_f64);
            let _ = writeln!(out, "{},{},{},{}", r.step, r.grad_evals, fmt_f64(r.f_gap), bound);
        }
        out
    }

    /// Parses trace CSV. A `nan` bound reads back as absent; diagnostics and
    /// sidecar metadata are not part of the CSV.
    pub fn from_csv(text: &str) -> Result<Self, HarnessError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == TRACE_HEADER => {}
            Some((_, h)) => {
                return Err(HarnessError::Csv {
                    line: 1,
                    msg: format!("expected header {TRACE_HEADER:?}, found {h:?}"),
                })
            }
            None => return Err(HarnessError::Csv { line: 1, msg: "empty file".into() }),
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let n = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(HarnessError::Csv {
                    line: n,
                    msg: format!("expected 4 columns, found {}", cols.len()),
                });
            }
            let bound = parse_f64(cols[3], n, "bound")?;
            rows.push(TraceRow {
                step: parse_u64(cols[0], n, "step")?,
                grad_evals: parse_u64(cols[1], n, "grad_evals")?,
                f_gap: parse_f64(cols[2], n, "f_gap")?,
                bound: (!bound.is_nan()).then_some(bound),
                diagnostics: BTreeMap::new(),
            });
        }
        if rows.is_empty() {
            return Err(HarnessError::Csv { line: 2, msg: "no data rows".into() });
        }
        let trace = Trace { rows, ..Trace::default() };
        trace.validate().map_err(|msg| HarnessError::Csv { line: 0, msg })?;
        Ok(trace)
    }

    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            value_kind: self.value_kind,
            bound: self.bound.map(|b| b.id().to_string()),
            bound_constants: self
                .bound_constants
                .entries()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            problem_constants: self.problem_constants.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    /// Writes the CSV to `path` and the sidecar next to it.
    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_csv()).map_err(|e| HarnessError::io(path, e))?;
        let side = sidecar_path(path);
        std::fs::write(&side, self.sidecar().to_toml()).map_err(|e| HarnessError::io(&side, e))
    }

    /// Reads a CSV trace and, when present, its sidecar.
    pub fn read(path: &Path) -> Result<(Self, Option<Sidecar>), HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut trace = Self::from_csv(&text)?;
        let side_path = sidecar_path(path);
        let sidecar = if side_path.exists() {
            let s = Sidecar::read(&side_path)?;
            trace.value_kind = s.value_kind;
            Some(s)
        } else {
            None
        };
        Ok((trace, sidecar))
    }
}

/// `<out>.constants.toml`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".constants.toml");
    PathBuf::from(s)
}

/// Constants and interpretation of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub value_kind: ValueKind,
    pub bound: Option<String>,
    pub bound_constants: BTreeMap<String, f64>,
    pub problem_constants: BTreeMap<String, f64>,
}

impl Sidecar {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("sidecar serializes")
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        toml::from_str(&text).map_err(|e| HarnessError::Config {
            field: path.display().to_string(),
            msg: e.message().trim().to_string(),
        })
    }

    /// Bound constants with unknown names rejected.
    pub fn bound_constants(&self) -> Result<BoundConstants, HarnessError> {
        let mut c = BoundConstants::default();
        for (k, v) in &self.bound_constants {
            c.set(k, *v).map_err(|e| HarnessError::Config {
                field: format!("bound_constants.{k}"),
                msg: e.to_string(),
            })?;
        }
        Ok(c)
    }
}
