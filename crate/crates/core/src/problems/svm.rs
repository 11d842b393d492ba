use nalgebra::DVector;
use rand::{Rng, RngCore};

use super::{project_origin_ball, Constants, Dataset, Problem, ProblemError, Row};
use crate::averaging::momentum_coeff;

/// Crammer–Singer multiclass hinge loss averaged over rows plus
/// `(λ/2)‖W‖²`. The weights `W` (classes × features) are stored row-major in
/// a flat vector.
#[derive(Debug, Clone)]
pub struct MulticlassSvm {
    data: Dataset,
    weight_decay: f64,
    radius: Option<f64>,
    constants: Constants,
}

/// Builds the problem. With positive weight decay the minimizer satisfies
/// `(λ/2)‖W*‖² ≤ f(0) = 1`, so the default constraint is the ball of radius
/// `√(2/λ)`, which leaves the optimum unchanged.
pub fn make_multiclass_svm(data: Dataset, weight_decay: f64) -> Result<MulticlassSvm, ProblemError> {
    if data.rows.is_empty() {
        return Err(ProblemError::EmptyDataset);
    }
    if data.n_classes < 2 {
        return Err(ProblemError::Invalid(format!("need at least 2 classes, got {}", data.n_classes)));
    }
    if !(weight_decay >= 0.0 && weight_decay.is_finite()) {
        return Err(ProblemError::Invalid(format!("weight decay must be nonnegative, got {weight_decay}")));
    }
    let radius = (weight_decay > 0.0).then(|| (2.0 / weight_decay).sqrt());
    let mut svm = MulticlassSvm {
        data,
        weight_decay,
        radius,
        constants: Constants::default(),
    };
    svm.refresh_constants();
    Ok(svm)
}

impl MulticlassSvm {
    /// Replaces the constraint radius.
    pub fn with_radius(mut self, radius: f64) -> Result<Self, ProblemError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(ProblemError::Invalid(format!("radius must be positive, got {radius}")));
        }
        self.radius = Some(radius);
        self.refresh_constants();
        Ok(self)
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    fn refresh_constants(&mut self) {
        let max_norm = self
            .data
            .rows
            .iter()
            .map(|r| r.features.iter().map(|(_, v)| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let mu = self.weight_decay;
        self.constants = Constants {
            g: Some(2.0 * max_norm + mu * self.radius.unwrap_or(0.0)),
            mu: (mu > 0.0).then_some(mu),
            r: self.radius,
            n_components: Some(self.data.rows.len()),
            mu_component: (mu > 0.0).then_some(mu),
            g_is_estimate: true,
            ..Constants::default()
        };
    }

    fn score(&self, w: &DVector<f64>, class: usize, row: &Row) -> f64 {
        let base = class * self.data.n_features;
        row.features.iter().map(|&(j, v)| w[base + j] * v).sum()
    }

    /// Hinge value of one row and the most violating wrong class, smallest
    /// index on ties.
    fn row_hinge(&self, w: &DVector<f64>, row: &Row) -> (f64, usize) {
        let correct = self.score(w, row.label, row);
        let mut best = (f64::NEG_INFINITY, 0);
        for class in (0..self.data.n_classes).filter(|&c| c != row.label) {
            let s = self.score(w, class, row);
            if s > best.0 {
                best = (s, class);
            }
        }
        ((1.0 + best.0 - correct).max(0.0), best.1)
    }

    fn add_row_subgradient(&self, w: &DVector<f64>, row: &Row, scale: f64, out: &mut DVector<f64>) {
        let (loss, wrong) = self.row_hinge(w, row);
        if loss > 0.0 {
            let d = self.data.n_features;
            for &(j, v) in &row.features {
                out[wrong * d + j] += scale * v;
                out[row.label * d + j] -= scale * v;
            }
        }
    }

    fn component(&self, x: &DVector<f64>, i: usize) -> DVector<f64> {
        let mut g = x * self.weight_decay;
        self.add_row_subgradient(x, &self.data.rows[i], 1.0, &mut g);
        g
    }
}

impl Problem for MulticlassSvm {
    fn kind(&self) -> &'static str {
        "svm"
    }

    fn dim(&self) -> usize {
        self.data.n_classes * self.data.n_features
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let n = self.data.rows.len() as f64;
        let loss: f64 = self.data.rows.iter().map(|r| self.row_hinge(x, r).0).sum();
        loss / n + 0.5 * self.weight_decay * x.norm_squared()
    }

    fn value_at_opt(&self) -> Option<f64> {
        None
    }

    fn minimizer(&self) -> Option<&DVector<f64>> {
        None
    }

    fn constants(&self) -> &Constants {
        &self.constants
    }

    fn stochastic_subgradient(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64> {
        let i = rng.random_range(0..self.data.rows.len());
        self.component(x, i)
    }

    fn full_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = x * self.weight_decay;
        let scale = 1.0 / self.data.rows.len() as f64;
        for row in &self.data.rows {
            self.add_row_subgradient(x, row, scale, &mut g);
        }
        g
    }

    fn component_gradient(&self, x: &DVector<f64>, i: usize) -> Result<DVector<f64>, ProblemError> {
        let n = self.data.rows.len();
        if i >= n {
            return Err(ProblemError::Component { index: i, n });
        }
        Ok(self.component(x, i))
    }

    fn project(&self, x: DVector<f64>) -> DVector<f64> {
        match self.radius {
            Some(r) => project_origin_ball(x, r),
            None => x,
        }
    }

    fn is_stochastic(&self) -> bool {
        self.data.rows.len() > 1
    }
}

/// Estimates `min f` by a long deterministic run of projected full-subgradient
/// steps with cubic (`r = 3`) iterate averaging, returning the smallest
/// objective value seen on either sequence.
///
/// Steps are `1/(μ(k+1))` when the problem declares `μ`, otherwise
/// `R/(G√(k+1))`.
pub fn reference_optimum(problem: &dyn Problem, iterations: usize) -> Result<f64, ProblemError> {
    let c = problem.constants();
    let step: Box<dyn Fn(usize) -> f64> = match (c.mu, c.r, c.g) {
        (Some(mu), _, _) => Box::new(move |k| 1.0 / (mu * (k + 1) as f64)),
        (None, Some(r), Some(g)) => Box::new(move |k| r / (g * ((k + 1) as f64).sqrt())),
        _ => {
            return Err(ProblemError::Invalid(
                "reference optimum needs mu, or both R and G".into(),
            ))
        }
    };
    let mut z = DVector::zeros(problem.dim());
    let mut x = z.clone();
    let mut best = problem.value(&x);
    for k in 0..iterations {
        let g = problem.full_gradient(&x);
        z = problem.project(&z - g * step(k));
        let c = momentum_coeff(k + 1, 3.0);
        x = &x * (1.0 - c) + &z * c;
        best = best.min(problem.value(&x)).min(problem.value(&z));
    }
    Ok(best)
}
