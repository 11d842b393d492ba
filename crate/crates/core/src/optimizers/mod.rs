//! First-order methods in iterate-averaging form, their factorial-power
//! parameter presets, and closed-form bound evaluators.

mod bounds;
mod cond_grad;
mod dual_avg;
mod nesterov;
mod sgdm;
mod svrgm;

pub use bounds::{bound_value, BoundConstants, BoundKind, BoundSpec};
pub use cond_grad::{cond_grad_step, BallLmo, CondGradSource, CondGradState, Lmo};
pub use dual_avg::{dual_avg_step, duality_gap, BetaSource, DualAvgState, GapAccumulator};
pub use nesterov::{nesterov_step, NesterovState};
pub use sgdm::{
    preset_sgdm_factorial, preset_sgdm_nonsmooth, preset_sgdm_sqrt_baseline, preset_sgdm_strongly_convex,
    sgdm_step, Schedule, SgdmSchedules, SgdmState,
};
pub use svrgm::{
    preset_svrgm_convex, preset_svrgm_strongly_convex, svrgm_epoch, svrgm_lyapunov, EpochGrowth, InnerCoeff,
    SvrgmParams, SvrgmState,
};

use thiserror::Error;

use crate::averaging::AveragingError;
use crate::facpow::FacPowError;
use crate::problems::ProblemError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("missing constants: {}", .0.join(", "))]
    MissingConstants(Vec<&'static str>),
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("schedule ended at step {0}")]
    ScheduleExhausted(usize),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Averaging(#[from] AveragingError),
    #[error(transparent)]
    FacPow(#[from] FacPowError),
}

pub(crate) fn positive(name: &str, v: f64) -> Result<f64, OptimError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(OptimError::Invalid(format!("{name} must be positive and finite, got {v}")))
    }
}
