use nalgebra::DVector;

use crate::problems::Problem;

/// Linear minimization oracle: `argmin_{p ∈ C} ⟨p, g⟩`.
pub trait Lmo {
    fn argmin(&self, g: &DVector<f64>) -> DVector<f64>;
}

/// Origin-centered ball of the given radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallLmo {
    pub radius: f64,
}

impl Lmo for BallLmo {
    /// `−R g/‖g‖`, or the origin when `g = 0`.
    fn argmin(&self, g: &DVector<f64>) -> DVector<f64> {
        let norm = g.norm();
        if norm == 0.0 {
            DVector::zeros(g.len())
        } else {
            g * (-self.radius / norm)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CondGradSource {
    /// `c ← c − c²/2`, starting from 1.
    OpenLoop,
    /// `1/(k+1)` at step `k`.
    InverseK,
    /// `2/(k+2)` at step `k`.
    Factorial,
}

/// `c` is the coefficient the next step will apply. Every source applies 1
/// on the first step, so `x_1` lies in `C` for any `x_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CondGradState {
    pub k: usize,
    pub x: DVector<f64>,
    pub source: CondGradSource,
    pub c: f64,
}

impl CondGradState {
    pub fn new(x0: DVector<f64>, source: CondGradSource) -> Self {
        Self {
            k: 0,
            x: x0,
            source,
            c: 1.0,
        }
    }
}

/// `p = lmo(∇f(x))`, `x' = (1 − c)x + c p`.
pub fn cond_grad_step(state: CondGradState, problem: &dyn Problem, lmo: &dyn Lmo) -> CondGradState {
    let CondGradState { k, x, source, c } = state;
    let p = lmo.argmin(&problem.full_gradient(&x));
    let x = x * (1.0 - c) + p * c;
    let k = k + 1;
    let c = match source {
        CondGradSource::OpenLoop => c - 0.5 * c * c,
        CondGradSource::InverseK => 1.0 / (k as f64 + 1.0),
        CondGradSource::Factorial => 2.0 / (k as f64 + 2.0),
    };
    CondGradState { k, x, source, c }
}
