//! Factorial-power averaging and the momentum/iterate-averaging transform.
//!
//! The weighted form
//!
//! ```text
//! x̄_k = (r+1) / (k+1)^(r+1) · Σ_{i=0}^{k} (i+1)^(r̄) x_i
//! ```
//!
//! equals the moving average `x̄_k = (1 − c_k) x̄_{k−1} + c_k x_k` with
//! `c_k = (r+1)/(k+r+1)`. The coefficient index always matches the index of
//! the point being folded in, so `c_0 = 1` and `x̄_0 = x_0`.

use nalgebra::DVector;
use thiserror::Error;

use crate::facpow::{facpow, FacPowError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AveragingError {
    #[error("averaging order must exceed -1, got {0}")]
    Order(f64),
    #[error("cannot average an empty sequence")]
    Empty,
    #[error("momentum transform degenerates at index {index}: c = {value} leaves (0, 1)")]
    Degenerate { index: usize, value: f64 },
    #[error("invalid momentum parameters: {0}")]
    Params(&'static str),
    #[error(transparent)]
    FacPow(#[from] FacPowError),
}

/// `c_k = (r+1)/(k+r+1)`.
pub fn momentum_coeff(k: usize, r: f64) -> f64 {
    debug_assert!(r > -1.0);
    (r + 1.0) / (k as f64 + r + 1.0)
}

/// Averaging order `r > −1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingScheme {
    r: f64,
}

impl AveragingScheme {
    pub fn new(r: f64) -> Result<Self, AveragingError> {
        if r > -1.0 && r.is_finite() {
            Ok(Self { r })
        } else {
            Err(AveragingError::Order(r))
        }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn coeff(&self, k: usize) -> f64 {
        momentum_coeff(k, self.r)
    }

    /// Weight of `x_i` in the average over `x_0..=x_k`.
    pub fn weight(&self, i: usize, k: usize) -> Result<f64, AveragingError> {
        let r = self.r;
        Ok((r + 1.0) * facpow((i + 1) as f64, r)? / facpow((k + 1) as f64, r + 1.0)?)
    }
}

/// Weighted-sum form of the factorial-power average of `points`.
pub fn weighted_average(points: &[DVector<f64>], r: f64) -> Result<DVector<f64>, AveragingError> {
    let scheme = AveragingScheme::new(r)?;
    let first = points.first().ok_or(AveragingError::Empty)?;
    let k = points.len() - 1;
    let mut acc = DVector::zeros(first.len());
    for (i, x) in points.iter().enumerate() {
        acc.axpy(facpow((i + 1) as f64, r)?, x, 1.0);
    }
    let norm = (scheme.r + 1.0) / facpow((k + 1) as f64, r + 1.0)?;
    Ok(acc * norm)
}

/// One moving-average update: `(1 − c_k) prev + c_k x_k`. At `k = 0` the
/// result is `x_k` whatever `prev` holds.
pub fn moving_average_step(prev: &DVector<f64>, x_k: &DVector<f64>, k: usize, r: f64) -> DVector<f64> {
    let c = momentum_coeff(k, r);
    if k == 0 {
        return x_k.clone();
    }
    prev * (1.0 - c) + x_k * c
}

/// Classical momentum parameters: constant `beta`, step sizes `alpha(k)`, and
/// the seed `c1` of the iterate-averaging coefficients.
#[derive(Debug, Clone)]
pub struct MomentumParams<A> {
    pub beta: f64,
    pub alpha: A,
    pub c1: f64,
}

/// Lazily emits `(η_k, c_{k+1})` for `k = 0, 1, …` with
/// `η_k = (α_k / c_{k+1})(1 − β)` and
/// `c_{k+1} = β (α_k/α_{k−1}) c_k / (1 − c_k)`.
///
/// A coefficient outside `(0, 1)` ends the stream with
/// [`AveragingError::Degenerate`].
#[derive(Debug, Clone)]
pub struct MomentumToIam<A> {
    params: MomentumParams<A>,
    k: usize,
    c: f64,
    done: bool,
}

pub fn momentum_to_iam<A>(params: MomentumParams<A>) -> Result<MomentumToIam<A>, AveragingError>
where
    A: Fn(usize) -> f64,
{
    if !(params.c1 > 0.0 && params.c1 < 1.0) {
        return Err(AveragingError::Params("c1 must lie in (0, 1)"));
    }
    if !(params.beta >= 0.0 && params.beta < 1.0) {
        return Err(AveragingError::Params("beta must lie in [0, 1)"));
    }
    let c = params.c1;
    Ok(MomentumToIam {
        params,
        k: 0,
        c,
        done: false,
    })
}

impl<A: Fn(usize) -> f64> Iterator for MomentumToIam<A> {
    type Item = Result<(f64, f64), AveragingError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let p = &self.params;
        let alpha = (p.alpha)(self.k);
        if self.k > 0 {
            let prev_alpha = (p.alpha)(self.k - 1);
            self.c = p.beta * (alpha / prev_alpha) * self.c / (1.0 - self.c);
        }
        let index = self.k + 1;
        if !(self.c > 0.0 && self.c < 1.0) || !(alpha > 0.0) {
            self.done = true;
            return Some(Err(AveragingError::Degenerate { index, value: self.c }));
        }
        let eta = alpha / self.c * (1.0 - p.beta);
        self.k += 1;
        Some(Ok((eta, self.c)))
    }
}
