use nalgebra::DVector;
use rand::RngCore;

use super::{project_origin_ball, Constants, Problem, ProblemError};

/// `f(x) = G‖x − x*‖` over the origin-centered ball of radius `R`.
#[derive(Debug, Clone)]
pub struct DistanceProblem {
    x_star: DVector<f64>,
    g: f64,
    radius: f64,
    constants: Constants,
}

pub fn make_distance_problem(x_star: DVector<f64>, g: f64, radius: f64) -> Result<DistanceProblem, ProblemError> {
    if !(g > 0.0 && g.is_finite()) || !(radius > 0.0 && radius.is_finite()) {
        return Err(ProblemError::Invalid(format!("G = {g} and R = {radius} must be positive")));
    }
    if x_star.norm() > radius {
        return Err(ProblemError::Invalid(format!(
            "minimizer norm {} lies outside the radius-{radius} ball",
            x_star.norm()
        )));
    }
    Ok(DistanceProblem {
        x_star,
        g,
        radius,
        constants: Constants {
            g: Some(g),
            r: Some(radius),
            ..Constants::default()
        },
    })
}

impl Problem for DistanceProblem {
    fn kind(&self) -> &'static str {
        "distance"
    }

    fn dim(&self) -> usize {
        self.x_star.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.g * (x - &self.x_star).norm()
    }

    fn value_at_opt(&self) -> Option<f64> {
        Some(0.0)
    }

    fn minimizer(&self) -> Option<&DVector<f64>> {
        Some(&self.x_star)
    }

    fn constants(&self) -> &Constants {
        &self.constants
    }

    fn stochastic_subgradient(&self, x: &DVector<f64>, _rng: &mut dyn RngCore) -> DVector<f64> {
        self.full_gradient(x)
    }

    fn full_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = x - &self.x_star;
        let norm = d.norm();
        if norm == 0.0 {
            d
        } else {
            d * (self.g / norm)
        }
    }

    fn project(&self, x: DVector<f64>) -> DVector<f64> {
        project_origin_ball(x, self.radius)
    }

    fn is_stochastic(&self) -> bool {
        false
    }
}
