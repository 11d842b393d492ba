use nalgebra::DVector;

use super::{positive, OptimError};
use crate::facpow::facpow;
use crate::problems::Problem;

/// Where the regularization weights `β̂_k` come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaSource {
    /// `β̂_k = 1/(k+1)^(−½‾)`.
    Factorial,
    /// `β̂_0 = β̂_1 = 1`, `β̂_{k+1} = β̂_k + 1/β̂_k`.
    Recursive,
}

impl BetaSource {
    fn initial(self) -> Result<f64, OptimError> {
        match self {
            BetaSource::Factorial => Ok(1.0 / facpow(1.0, -0.5)?),
            BetaSource::Recursive => Ok(1.0),
        }
    }
}

/// `inv_sum` accumulates `Σ_{i≤k} 1/β̂_i`, which the recursive weights
/// reproduce as `β̂_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualAvgState {
    pub k: usize,
    pub s: DVector<f64>,
    pub x: DVector<f64>,
    pub source: BetaSource,
    pub beta: f64,
    pub inv_sum: f64,
}

impl DualAvgState {
    pub fn new(x0: DVector<f64>, source: BetaSource) -> Result<Self, OptimError> {
        let beta = source.initial()?;
        Ok(Self {
            k: 0,
            s: DVector::zeros(x0.len()),
            x: x0,
            source,
            beta,
            inv_sum: 1.0 / beta,
        })
    }
}

/// `s' = s + ∇f(x_k)`, advance `β̂`, then
/// `x_{k+1} = x_0 − s'/(γ β̂_{k+1})`. Returns the new state and the gradient
/// used, so callers can accumulate the duality gap.
pub fn dual_avg_step(
    state: DualAvgState,
    problem: &dyn Problem,
    gamma: f64,
    x0: &DVector<f64>,
) -> Result<(DualAvgState, DVector<f64>), OptimError> {
    positive("gamma", gamma)?;
    let DualAvgState {
        k,
        mut s,
        x,
        source,
        beta,
        inv_sum,
    } = state;
    let g = problem.full_gradient(&x);
    s += &g;
    let beta = match source {
        BetaSource::Factorial => 1.0 / facpow(k as f64 + 2.0, -0.5)?,
        BetaSource::Recursive if k == 0 => 1.0,
        BetaSource::Recursive => beta + 1.0 / beta,
    };
    let x = x0 - &s / (gamma * beta);
    let next = DualAvgState {
        k: k + 1,
        s,
        x,
        source,
        beta,
        inv_sum: inv_sum + 1.0 / beta,
    };
    Ok((next, g))
}

/// Running form of the ball duality gap
/// `(1/(n+1)) (Σ⟨g_i, x_i⟩ + R‖Σ g_i‖)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapAccumulator {
    radius: f64,
    inner: f64,
    sum: DVector<f64>,
    count: usize,
}

impl GapAccumulator {
    pub fn new(dim: usize, radius: f64) -> Self {
        Self {
            radius,
            inner: 0.0,
            sum: DVector::zeros(dim),
            count: 0,
        }
    }

    pub fn push(&mut self, x: &DVector<f64>, g: &DVector<f64>) {
        self.inner += g.dot(x);
        self.sum += g;
        self.count += 1;
    }

    pub fn value(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.inner + self.radius * self.sum.norm()) / self.count as f64
    }
}

/// `max_{‖x‖≤R} (1/(n+1)) Σ ⟨g_i, x_i − x⟩` for the pairs `(x_i, g_i)`.
pub fn duality_gap(history: &[(DVector<f64>, DVector<f64>)], radius: f64) -> f64 {
    let Some((first, _)) = history.first() else {
        return 0.0;
    };
    let mut acc = GapAccumulator::new(first.len(), radius);
    for (x, g) in history {
        acc.push(x, g);
    }
    acc.value()
}
