use std::fmt;

use super::trace::{Trace, ValueKind};
use super::HarnessError;
use crate::optimizers::{BoundKind, BoundSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub bound: BoundKind,
    pub slack: f64,
    pub rows: usize,
    /// Largest `f_gap / bound` over all rows, with the step it occurred at.
    pub worst_ratio: f64,
    pub worst_step: u64,
    pub violations: usize,
    pub first_violation: Option<u64>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict} {} (slack {}): worst gap/bound ratio {:.6} at step {} over {} rows",
            self.bound, self.slack, self.worst_ratio, self.worst_step, self.rows
        )?;
        if let Some(step) = self.first_violation {
            write!(f, "; {} violation(s), first at step {step}", self.violations)?;
        }
        Ok(())
    }
}

/// Passes iff `f_gap ≤ slack · bound(step)` at every row. A NaN gap counts
/// as a violation; an infinite bound is never violated.
pub fn check(trace: &Trace, spec: &BoundSpec, slack: f64) -> Result<CheckReport, HarnessError> {
    if !(slack >= 1.0 && slack.is_finite()) {
        return Err(HarnessError::Config {
            field: "slack".into(),
            msg: format!("must be a finite number >= 1, got {slack}"),
        });
    }
    if trace.value_kind == ValueKind::Value {
        return Err(HarnessError::Config {
            field: "trace".into(),
            msg: "trace holds raw objective values, not gaps".into(),
        });
    }
    if trace.rows.is_empty() {
        return Err(HarnessError::Csv { line: 2, msg: "no data rows".into() });
    }
    let mut report = CheckReport {
        bound: spec.kind,
        slack,
        rows: trace.rows.len(),
        worst_ratio: f64::NEG_INFINITY,
        worst_step: trace.rows[0].step,
        violations: 0,
        first_violation: None,
    };
    for row in &trace.rows {
        let bound = spec.value(row.step)?;
        let ratio = if bound.is_infinite() && row.f_gap.is_finite() {
            0.0
        } else {
            row.f_gap / bound
        };
        let ok = row.f_gap <= slack * bound;
        if !ok {
            report.violations += 1;
            report.first_violation.get_or_insert(row.step);
        }
        if ratio > report.worst_ratio || (ratio.is_nan() && !report.worst_ratio.is_nan()) {
            report.worst_ratio = ratio;
            report.worst_step = row.step;
        }
    }
    Ok(report)
}
