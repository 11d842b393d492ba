//! Objective functions with gradient oracles, declared constants and
//! projections.

mod distance;
mod libsvm;
mod quadratic;
mod svm;

pub use distance::{make_distance_problem, DistanceProblem};
pub use libsvm::{
    fixture_dataset, fixture_text, parse_libsvm, read_libsvm, synthetic_libsvm, Dataset, Row, FIXTURE, FIXTURE_SEED,
};
pub use quadratic::{make_quadratic, make_ridge, random_quadratic, Quadratic};
pub use svm::{make_multiclass_svm, reference_optimum, MulticlassSvm};

use nalgebra::DVector;
use rand::RngCore;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid problem parameter: {0}")]
    Invalid(String),
    #[error("matrix is rank deficient (smallest eigenvalue {0:e})")]
    RankDeficient(f64),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("problem has no {0} oracle")]
    MissingOracle(&'static str),
    #[error("component index {index} out of range for {n} components")]
    Component { index: usize, n: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

/// Declared problem constants. Absent entries are `None`.
///
/// `l_component` and `mu_component` are the constants of the individual
/// summands `f_i`, which can be much weaker than those of their average.
/// Variance-reduced methods need the per-component values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Constants {
    pub g: Option<f64>,
    pub l: Option<f64>,
    pub mu: Option<f64>,
    pub r: Option<f64>,
    pub n_components: Option<usize>,
    pub l_component: Option<f64>,
    pub mu_component: Option<f64>,
    pub sigma2: Option<f64>,
    /// `g` is an estimate rather than a proven bound.
    pub g_is_estimate: bool,
}

impl Constants {
    /// Named list of the present constants, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        let mut out = Vec::new();
        let mut push = |name, v: Option<f64>| {
            if let Some(v) = v {
                out.push((name, v));
            }
        };
        push("G", self.g);
        push("L", self.l);
        push("mu", self.mu);
        push("R", self.r);
        push("n_components", self.n_components.map(|n| n as f64));
        push("L_component", self.l_component);
        push("mu_component", self.mu_component);
        push("sigma2", self.sigma2);
        out
    }
}

/// An objective with first-order oracles. Implementations are immutable and
/// all randomness comes from the caller's RNG stream.
pub trait Problem: Send + Sync {
    fn kind(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn value_at_opt(&self) -> Option<f64>;
    fn minimizer(&self) -> Option<&DVector<f64>>;
    fn constants(&self) -> &Constants;

    /// `f(x) − f*` when the optimum is known.
    fn gap(&self, x: &DVector<f64>) -> Option<f64> {
        self.value_at_opt().map(|fs| self.value(x) - fs)
    }

    /// Unbiased estimate of a subgradient at `x`.
    fn stochastic_subgradient(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64>;

    /// Exact (sub)gradient at `x`.
    fn full_gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    fn component_gradient(&self, _x: &DVector<f64>, _i: usize) -> Result<DVector<f64>, ProblemError> {
        Err(ProblemError::MissingOracle("component gradient"))
    }

    fn project(&self, x: DVector<f64>) -> DVector<f64>;

    /// Whether the stochastic oracle actually consumes randomness.
    fn is_stochastic(&self) -> bool;
}

/// Euclidean projection onto the ball of radius `r` around `center`.
pub fn project_ball(x: DVector<f64>, center: &DVector<f64>, r: f64) -> DVector<f64> {
    debug_assert!(r > 0.0);
    let d = &x - center;
    let norm = d.norm();
    if norm <= r {
        x
    } else {
        center + d * (r / norm)
    }
}

/// Same as [`project_ball`] with the origin as center.
pub fn project_origin_ball(mut x: DVector<f64>, r: f64) -> DVector<f64> {
    let norm = x.norm();
    if norm > r {
        x *= r / norm;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ball_examples() {
        let c = DVector::from_vec(vec![1.0, 1.0]);
        let inside = DVector::from_vec(vec![1.5, 0.5]);
        assert_eq!(project_ball(inside.clone(), &c, 1.0), inside);
        let far = DVector::from_vec(vec![1.0, 5.0]);
        let p = project_ball(far, &c, 2.0);
        assert!((p - DVector::from_vec(vec![1.0, 3.0])).norm() < 1e-15);
    }

    fn vec3() -> impl Strategy<Value = DVector<f64>> {
        prop::collection::vec(-10.0..10.0f64, 3).prop_map(DVector::from_vec)
    }

    proptest! {
        #[test]
        fn projection_idempotent_and_nonexpansive(x in vec3(), y in vec3(), c in vec3(), r in 0.1..5.0f64) {
            let px = project_ball(x.clone(), &c, r);
            let py = project_ball(y.clone(), &c, r);
            prop_assert!((&px - &c).norm() <= r * (1.0 + 1e-12));
            let ppx = project_ball(px.clone(), &c, r);
            prop_assert!((&ppx - &px).norm() <= 1e-12 * (1.0 + px.norm()));
            prop_assert!((&px - &py).norm() <= (&x - &y).norm() + 1e-12);
        }
    }
}
