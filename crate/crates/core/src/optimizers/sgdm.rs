use nalgebra::DVector;
use rand::RngCore;

use super::{positive, OptimError};
use crate::averaging::momentum_coeff;
use crate::facpow::schedule;
use crate::problems::Problem;

/// An endless stream of per-step parameters.
pub type Schedule = Box<dyn Iterator<Item = f64> + Send>;

/// Step sizes `η_k` and averaging coefficients, where the `k`-th item of `c`
/// is the coefficient applied at step `k` (the one producing `x_{k+1}`).
pub struct SgdmSchedules {
    pub eta: Schedule,
    pub c: Schedule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdmState {
    pub k: usize,
    pub x: DVector<f64>,
    pub z: DVector<f64>,
}

impl SgdmState {
    pub fn new(x0: DVector<f64>) -> Self {
        Self {
            k: 0,
            z: x0.clone(),
            x: x0,
        }
    }
}

/// `z' = Π(z − η g)` with `g` a stochastic subgradient at `x`, then
/// `x' = (1 − c) x + c z'`.
pub fn sgdm_step(
    state: SgdmState,
    problem: &dyn Problem,
    eta: f64,
    c_next: f64,
    rng: &mut dyn RngCore,
) -> Result<SgdmState, OptimError> {
    positive("step size", eta)?;
    if !(c_next > 0.0 && c_next <= 1.0) {
        return Err(OptimError::Invalid(format!("averaging coefficient {c_next} outside (0, 1]")));
    }
    let SgdmState { k, x, z } = state;
    let g = problem.stochastic_subgradient(&x, rng);
    let z = problem.project(z - g * eta);
    let x = if c_next == 1.0 { z.clone() } else { x * (1.0 - c_next) + &z * c_next };
    Ok(SgdmState { k: k + 1, x, z })
}

/// Uniform averaging of `z_0, …, z_{k+1}`: the coefficient at step `k` is
/// `1/(k+2)`.
fn uniform_with_start() -> Schedule {
    Box::new((0..).map(|k: u64| 1.0 / (k as f64 + 2.0)))
}

/// Half-power steps `η_k = √½ (R/G) (k+1)^(−½‾)` with uniform averaging of all
/// `z` iterates including `z_0 = x_0`.
pub fn preset_sgdm_nonsmooth(g: f64, r: f64) -> Result<SgdmSchedules, OptimError> {
    let (g, r) = (positive("G", g)?, positive("R", r)?);
    let eta = schedule(-0.5, 0.5f64.sqrt() * r / g, 1)?;
    Ok(SgdmSchedules {
        eta: Box::new(eta),
        c: uniform_with_start(),
    })
}

/// `η_k = R/(G√(2(k+1)))` with the same averaging as the half-power preset.
pub fn preset_sgdm_sqrt_baseline(g: f64, r: f64) -> Result<SgdmSchedules, OptimError> {
    let (g, r) = (positive("G", g)?, positive("R", r)?);
    Ok(SgdmSchedules {
        eta: Box::new((0..).map(move |k: u64| r / (g * (2.0 * (k as f64 + 1.0)).sqrt()))),
        c: uniform_with_start(),
    })
}

/// `η_k = 1/(μ(k+1))` with cubic factorial momentum `c = 4/(k+4)`.
pub fn preset_sgdm_strongly_convex(mu: f64) -> Result<SgdmSchedules, OptimError> {
    preset_sgdm_factorial(mu, 3.0)
}

/// `η_k = 1/(μ(k+1))` with order-`r` factorial momentum
/// `c = (r+1)/(k+r+1)` at step `k`.
pub fn preset_sgdm_factorial(mu: f64, r: f64) -> Result<SgdmSchedules, OptimError> {
    let mu = positive("mu", mu)?;
    if !(r > -1.0 && r.is_finite()) {
        return Err(OptimError::Invalid(format!("momentum order must exceed -1, got {r}")));
    }
    Ok(SgdmSchedules {
        eta: Box::new((0..).map(move |k: u64| 1.0 / (mu * (k as f64 + 1.0)))),
        c: Box::new((0..).map(move |k: usize| momentum_coeff(k, r))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_distance_problem, random_quadratic};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_step_on_absolute_value() {
        let g = 0.8;
        let p = make_distance_problem(DVector::zeros(1), g, 1.0).unwrap();
        let s = SgdmState::new(DVector::from_element(1, 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sgdm_step(s, &p, 0.1, 0.5, &mut rng).unwrap();
        assert_relative_eq!(s.z[0], 1.0 - 0.1 * g, max_relative = 1e-15);
        assert_relative_eq!(s.x[0], 1.0 - 0.05 * g, max_relative = 1e-15);
        assert_eq!(s.k, 1);
    }

    #[test]
    fn full_coefficient_is_projected_sgd() {
        let p = make_distance_problem(DVector::from_vec(vec![0.2, 0.1]), 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sgdm_step(SgdmState::new(DVector::from_vec(vec![0.9, -0.4])), &p, 0.3, 1.0, &mut rng).unwrap();
        assert_eq!(s.x, s.z);
    }

    #[test]
    fn minimizer_is_fixed() {
        let q = random_quadratic(1, 1, 0.0, 4).unwrap();
        let xs = q.minimizer().unwrap().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sgdm_step(SgdmState::new(xs.clone()), &q, 0.5, 0.3, &mut rng).unwrap();
        assert!((s.x - &xs).norm() < 1e-15 && (s.z - &xs).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = make_distance_problem(DVector::zeros(1), 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = SgdmState::new(DVector::zeros(1));
        assert!(sgdm_step(s.clone(), &p, 0.0, 0.5, &mut rng).is_err());
        assert!(sgdm_step(s, &p, 0.1, 1.5, &mut rng).is_err());
        assert!(preset_sgdm_nonsmooth(0.0, 1.0).is_err());
    }

    #[test]
    fn preset_values() {
        let (g, r) = (2.0, 3.0);
        let mut p = preset_sgdm_nonsmooth(g, r).unwrap();
        assert_relative_eq!(
            p.eta.next().unwrap(),
            0.5f64.sqrt() * r / g * std::f64::consts::PI.sqrt(),
            max_relative = 1e-15
        );
        let c: Vec<f64> = p.c.take(3).collect();
        assert_eq!(c, vec![0.5, 1.0 / 3.0, 0.25]);

        let mut b = preset_sgdm_sqrt_baseline(g, r).unwrap();
        assert_relative_eq!(b.eta.next().unwrap(), r / (g * 2.0f64.sqrt()), max_relative = 1e-15);

        let mu = 0.25;
        let mut s = preset_sgdm_strongly_convex(mu).unwrap();
        assert_relative_eq!(s.eta.next().unwrap(), 1.0 / mu);
        let c: Vec<f64> = s.c.take(40).collect();
        assert_eq!(c[0], 1.0);
        for (k, ck) in c.iter().enumerate() {
            assert_relative_eq!(*ck, 4.0 / (k as f64 + 4.0), max_relative = 1e-15);
            assert_eq!(*ck, momentum_coeff(k, 3.0));
        }
    }
}
