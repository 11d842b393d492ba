use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Constants, Problem, ProblemError};

/// Regularized least squares `f(x) = ½‖Ax − b‖² + (λ/2)‖x‖²`, written as the
/// mean of components `f_i(x) = (n/2)(a_iᵀx − b_i)² + (λ/2)‖x‖²`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    a: DMatrix<f64>,
    b: DVector<f64>,
    ridge: f64,
    hessian: DMatrix<f64>,
    x_star: DVector<f64>,
    f_star: f64,
    constants: Constants,
}

pub fn make_quadratic(a: DMatrix<f64>, b: DVector<f64>) -> Result<Quadratic, ProblemError> {
    make_ridge(a, b, 0.0)
}

pub fn make_ridge(a: DMatrix<f64>, b: DVector<f64>, ridge: f64) -> Result<Quadratic, ProblemError> {
    let (n, d) = a.shape();
    if n == 0 || d == 0 {
        return Err(ProblemError::EmptyDataset);
    }
    if b.len() != n {
        return Err(ProblemError::Invalid(format!("b has length {} but A has {n} rows", b.len())));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(ProblemError::Invalid(format!("ridge must be nonnegative, got {ridge}")));
    }
    let mut hessian = a.transpose() * &a;
    for i in 0..d {
        hessian[(i, i)] += ridge;
    }
    let eig = hessian.clone().symmetric_eigen();
    let l = eig.eigenvalues.max();
    let mu = eig.eigenvalues.min();
    if !(mu > 1e-12 * l) {
        return Err(ProblemError::RankDeficient(mu));
    }
    let chol = hessian.clone().cholesky().ok_or(ProblemError::RankDeficient(mu))?;
    let x_star = chol.solve(&(a.transpose() * &b));

    let nf = n as f64;
    let l_component = a
        .row_iter()
        .map(|row| nf * row.norm_squared() + ridge)
        .fold(0.0, f64::max);
    let mut q = Quadratic {
        a,
        b,
        ridge,
        hessian,
        x_star,
        f_star: 0.0,
        constants: Constants {
            l: Some(l),
            mu: Some(mu),
            n_components: Some(n),
            l_component: Some(l_component),
            mu_component: (ridge > 0.0).then_some(ridge),
            ..Constants::default()
        },
    };
    q.f_star = q.value(&q.x_star);
    let sigma2 = (0..n)
        .map(|i| q.component(&q.x_star, i).norm_squared())
        .sum::<f64>()
        / nf;
    q.constants.sigma2 = Some(sigma2);
    Ok(q)
}

/// Seeded random instance: Gaussian design scaled by `1/√rows`, targets from
/// a Gaussian planted vector plus 0.1-scale noise.
pub fn random_quadratic(rows: usize, dim: usize, ridge: f64, seed: u64) -> Result<Quadratic, ProblemError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (rows.max(1) as f64).sqrt();
    let a = DMatrix::from_fn(rows, dim, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    let planted = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let noise = DVector::from_fn(rows, |_, _| 0.1 * rng.sample::<f64, _>(StandardNormal));
    let b = &a * planted + noise;
    make_ridge(a, b, ridge)
}

impl Quadratic {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    fn component(&self, x: &DVector<f64>, i: usize) -> DVector<f64> {
        let row = self.a.row(i);
        let resid = row.dot(&x.transpose()) - self.b[i];
        let n = self.a.nrows() as f64;
        row.transpose() * (n * resid) + x * self.ridge
    }
}

impl Problem for Quadratic {
    fn kind(&self) -> &'static str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * (&self.a * x - &self.b).norm_squared() + 0.5 * self.ridge * x.norm_squared()
    }

    fn value_at_opt(&self) -> Option<f64> {
        Some(self.f_star)
    }

    fn minimizer(&self) -> Option<&DVector<f64>> {
        Some(&self.x_star)
    }

    fn constants(&self) -> &Constants {
        &self.constants
    }

    /// Evaluated as `½(x − x*)ᵀH(x − x*)`, which avoids cancelling two nearly
    /// equal objective values.
    fn gap(&self, x: &DVector<f64>) -> Option<f64> {
        let d = x - &self.x_star;
        Some(0.5 * d.dot(&(&self.hessian * &d)))
    }

    fn stochastic_subgradient(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64> {
        let i = rng.random_range(0..self.a.nrows());
        self.component(x, i)
    }

    fn full_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.a.transpose() * (&self.a * x - &self.b) + x * self.ridge
    }

    fn component_gradient(&self, x: &DVector<f64>, i: usize) -> Result<DVector<f64>, ProblemError> {
        let n = self.a.nrows();
        if i >= n {
            return Err(ProblemError::Component { index: i, n });
        }
        Ok(self.component(x, i))
    }

    fn project(&self, x: DVector<f64>) -> DVector<f64> {
        x
    }

    fn is_stochastic(&self) -> bool {
        self.a.nrows() > 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_instance() {
        let q = make_quadratic(DMatrix::identity(3, 3), DVector::zeros(3)).unwrap();
        assert!((q.constants().l.unwrap() - 1.0).abs() < 1e-14);
        assert!((q.constants().mu.unwrap() - 1.0).abs() < 1e-14);
        assert!(q.minimizer().unwrap().norm() < 1e-15);
        let x = DVector::from_vec(vec![1.0, 2.0, -2.0]);
        assert!((q.value(&x) - 4.5).abs() < 1e-14);
    }

    #[test]
    fn scalar_instance() {
        let l: f64 = 3.5;
        let q = make_quadratic(DMatrix::from_element(1, 1, l.sqrt()), DVector::zeros(1)).unwrap();
        let x = DVector::from_element(1, 2.0);
        assert!((q.value(&x) - 0.5 * l * 4.0).abs() < 1e-13);
        assert!((q.constants().l.unwrap() - l).abs() < 1e-13);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, -1.0, -2.0]);
        assert!(matches!(make_quadratic(a.clone(), DVector::zeros(3)), Err(ProblemError::RankDeficient(_))));
        assert!(make_ridge(a, DVector::zeros(3), 0.1).is_ok());
    }

    #[test]
    fn minimizer_has_zero_gradient() {
        let q = random_quadratic(50, 20, 0.0, 3).unwrap();
        assert!(q.full_gradient(q.minimizer().unwrap()).norm() < 1e-10);
        assert!(q.gap(q.minimizer().unwrap()).unwrap().abs() < 1e-20);
    }
}
