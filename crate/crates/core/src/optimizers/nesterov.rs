use nalgebra::DVector;

use super::OptimError;
use crate::problems::Problem;

/// Accelerated gradient in iterate-averaging form. `y` is rebuilt from `x`
/// and `z` each step.
#[derive(Debug, Clone, PartialEq)]
pub struct NesterovState {
    pub k: usize,
    pub x: DVector<f64>,
    pub z: DVector<f64>,
}

impl NesterovState {
    pub fn new(x0: DVector<f64>) -> Self {
        Self {
            k: 0,
            z: x0.clone(),
            x: x0,
        }
    }
}

/// With `c = 2/(k+2)` at step `k`: `y = (1−c)x + cz`,
/// `z' = z − ((k+1)/(2L)) ∇f(y)`, `x' = (1−c)x + cz'`.
pub fn nesterov_step(state: NesterovState, problem: &dyn Problem) -> Result<NesterovState, OptimError> {
    let l = problem.constants().l.ok_or(OptimError::MissingConstants(vec!["L"]))?;
    let NesterovState { k, x, z } = state;
    let kf = k as f64;
    let c = 2.0 / (kf + 2.0);
    let y = &x * (1.0 - c) + &z * c;
    let z = z - problem.full_gradient(&y) * ((kf + 1.0) / (2.0 * l));
    let x = x * (1.0 - c) + &z * c;
    Ok(NesterovState { k: k + 1, x, z })
}
