use nalgebra::DVector;
use rand::{Rng, RngCore};

use super::{positive, OptimError};
use crate::averaging::momentum_coeff;
use crate::problems::{Problem, ProblemError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochGrowth {
    Doubling,
    Constant,
}

impl EpochGrowth {
    pub fn next(self, m: usize) -> usize {
        match self {
            EpochGrowth::Doubling => 2 * m,
            EpochGrowth::Constant => m,
        }
    }
}

/// Inner-loop averaging coefficient `c_t`. Inner step `t` applies `c_{t+1}`,
/// and `t` restarts every epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerCoeff {
    Factorial { r: f64 },
    Constant(f64),
}

impl InnerCoeff {
    pub fn at(self, t: usize) -> f64 {
        match self {
            InnerCoeff::Factorial { r } => momentum_coeff(t, r),
            InnerCoeff::Constant(c) => c,
        }
    }
}

/// Parameters of one SVRGM configuration. `l` and `mu` are the constants the
/// preset was derived from; the Lyapunov diagnostic reuses them.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrgmParams {
    pub eta: f64,
    pub coeff: InnerCoeff,
    pub m0: usize,
    pub growth: EpochGrowth,
    pub l: f64,
    pub mu: Option<f64>,
}

/// `η = 1/(6L)`, `c_t = 1.5/(t+1.5)`, epoch lengths doubling from `m0`.
pub fn preset_svrgm_convex(l: f64, m0: usize) -> Result<SvrgmParams, OptimError> {
    let l = positive("L", l)?;
    if m0 == 0 {
        return Err(OptimError::Invalid("m0 must be at least 1".into()));
    }
    Ok(SvrgmParams {
        eta: 1.0 / (6.0 * l),
        coeff: InnerCoeff::Factorial { r: 0.5 },
        m0,
        growth: EpochGrowth::Doubling,
        l,
        mu: None,
    })
}

/// `κ = L/μ`, `m = ⌈6κ⌉`, `c = (5/3)/(4κ+1)`, `η = 1/(10L)`.
pub fn preset_svrgm_strongly_convex(l: f64, mu: f64) -> Result<SvrgmParams, OptimError> {
    let (l, mu) = (positive("L", l)?, positive("mu", mu)?);
    if l < mu {
        return Err(OptimError::Invalid(format!("L = {l} is below mu = {mu}")));
    }
    let kappa = l / mu;
    Ok(SvrgmParams {
        eta: 1.0 / (10.0 * l),
        coeff: InnerCoeff::Constant((5.0 / 3.0) / (4.0 * kappa + 1.0)),
        m0: (6.0 * kappa).ceil() as usize,
        growth: EpochGrowth::Constant,
        l,
        mu: Some(mu),
    })
}

/// State between epochs. `x`, `z` carry over without reset; `x_prev` is the
/// inner iterate before `x`; `m` is the length of the last epoch (`m0`
/// before the first).
#[derive(Debug, Clone, PartialEq)]
pub struct SvrgmState {
    pub s: usize,
    pub t: usize,
    pub snapshot: DVector<f64>,
    pub snapshot_grad: DVector<f64>,
    pub x: DVector<f64>,
    pub x_prev: DVector<f64>,
    pub z: DVector<f64>,
    pub m: usize,
    pub grad_evals: u64,
}

impl SvrgmState {
    pub fn new(x0: DVector<f64>, m0: usize) -> Self {
        Self {
            s: 0,
            t: 0,
            snapshot: x0.clone(),
            snapshot_grad: DVector::zeros(x0.len()),
            x_prev: x0.clone(),
            z: x0.clone(),
            x: x0,
            m: m0,
            grad_evals: 0,
        }
    }
}

/// Runs one outer iteration: snapshot at the carried-over `x`, full gradient
/// there, then `m_s` variance-reduced inner steps.
pub fn svrgm_epoch(
    state: SvrgmState,
    problem: &dyn Problem,
    params: &SvrgmParams,
    rng: &mut dyn RngCore,
) -> Result<SvrgmState, OptimError> {
    positive("step size", params.eta)?;
    let n = problem
        .constants()
        .n_components
        .ok_or(ProblemError::MissingOracle("component gradient"))?;
    let SvrgmState {
        s,
        mut x,
        mut x_prev,
        mut z,
        m,
        mut grad_evals,
        ..
    } = state;
    let m = params.growth.next(m);
    let snapshot = x.clone();
    let snapshot_grad = problem.full_gradient(&snapshot);
    grad_evals += n as u64;
    for t in 0..m {
        let j = rng.random_range(0..n);
        let g = problem.component_gradient(&x, j)? - problem.component_gradient(&snapshot, j)? + &snapshot_grad;
        grad_evals += 2;
        z -= g * params.eta;
        let c = params.coeff.at(t + 1);
        let next = &x * (1.0 - c) + &z * c;
        x_prev = std::mem::replace(&mut x, next);
    }
    Ok(SvrgmState {
        s: s + 1,
        t: m,
        snapshot,
        snapshot_grad,
        x,
        x_prev,
        z,
        m,
        grad_evals,
    })
}

/// Epoch potential used to track contraction.
///
/// Without `mu`: `(9L/(2m_s))‖z − x*‖² + f(x) − f*`.
/// With `mu`: `f(x) − f* + (3/4)μ‖x − x* + λ(x − x_prev)‖²` with `λ = 4κ`,
/// evaluated at the last two inner iterates of the epoch (both equal `x_0`
/// before the first epoch).
pub fn svrgm_lyapunov(state: &SvrgmState, problem: &dyn Problem, params: &SvrgmParams) -> Result<f64, OptimError> {
    let unknown = || OptimError::Problem(ProblemError::Invalid("Lyapunov value needs a known minimizer".into()));
    let xs = problem.minimizer().ok_or_else(unknown)?;
    let gap = problem.gap(&state.x).ok_or_else(unknown)?;
    let l = params.l;
    Ok(match params.mu {
        None => 9.0 * l / (2.0 * state.m as f64) * (&state.z - xs).norm_squared() + gap,
        Some(mu) => {
            let lambda = 4.0 * l / mu;
            let v = &state.x - xs + (&state.x - &state.x_prev) * lambda;
            gap + 0.75 * mu * v.norm_squared()
        }
    })
}
