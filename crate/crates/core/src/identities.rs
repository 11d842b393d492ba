//! Executable identity and inequality suites for factorial powers and
//! factorial-power averaging.
//!
//! The factorial-power checks take the evaluator as a parameter so a
//! deliberately perturbed implementation can be shown to fail them.

use std::fmt;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::averaging::{momentum_to_iam, moving_average_step, weighted_average, MomentumParams};
use crate::facpow::facpow;
use crate::optimizers::{sgdm_step, SgdmState};
use crate::problems::{random_quadratic, Problem};

/// `(k, r) ↦ k^(r̄)`; invalid arguments should yield NaN.
pub type Evaluator<'a> = &'a dyn Fn(f64, f64) -> f64;

/// The library evaluator with errors mapped to NaN.
pub fn library_evaluator(k: f64, r: f64) -> f64 {
    facpow(k, r).unwrap_or(f64::NAN)
}

pub const K_GRID: std::ops::RangeInclusive<u32> = 1..=50;
pub const R_GRID: [f64; 7] = [-0.9, -0.5, 0.0, 0.5, 1.0, 2.0, 3.7];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// Passes when the largest relative error is at most the tolerance.
    MaxRelError(f64),
    /// Passes when the smallest relative slack of an inequality is
    /// nonnegative (positive when strict).
    MinSlack { strict: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    /// Largest error or smallest slack observed.
    pub worst: f64,
    pub worst_case: String,
    pub criterion: Criterion,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        if self.cases == 0 || self.worst.is_nan() {
            return false;
        }
        match self.criterion {
            Criterion::MaxRelError(tol) => self.worst <= tol,
            Criterion::MinSlack { strict: true } => self.worst > 0.0,
            Criterion::MinSlack { strict: false } => self.worst >= 0.0,
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let (label, limit) = match self.criterion {
            Criterion::MaxRelError(tol) => ("max rel err", format!("<= {tol:.0e}")),
            Criterion::MinSlack { strict } => ("min slack", if strict { "> 0".into() } else { ">= 0".into() }),
        };
        write!(
            f,
            "{verdict}  {:<46} {label} {:>10.3e} ({limit}) over {} cases, worst at {}",
            self.name, self.worst, self.cases, self.worst_case
        )
    }
}

struct Tracker {
    name: &'static str,
    criterion: Criterion,
    cases: usize,
    worst: f64,
    worst_case: String,
}

impl Tracker {
    fn new(name: &'static str, criterion: Criterion) -> Self {
        let worst = match criterion {
            Criterion::MaxRelError(_) => 0.0,
            Criterion::MinSlack { .. } => f64::INFINITY,
        };
        Self {
            name,
            criterion,
            cases: 0,
            worst,
            worst_case: "-".into(),
        }
    }

    fn record(&mut self, value: f64, case: impl FnOnce() -> String) {
        self.cases += 1;
        let worse = match self.criterion {
            _ if value.is_nan() => !self.worst.is_nan(),
            Criterion::MaxRelError(_) => value > self.worst,
            Criterion::MinSlack { .. } => value < self.worst,
        };
        if worse {
            self.worst = value;
            self.worst_case = case();
        }
    }

    fn rel(&mut self, lhs: f64, rhs: f64, case: impl FnOnce() -> String) {
        self.record(rel_err(lhs, rhs), case);
    }

    /// Slack of `lo ≤ hi` relative to `|hi|`.
    fn below(&mut self, lo: f64, hi: f64, case: impl FnOnce() -> String) {
        self.record((hi - lo) / hi.abs(), case);
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name,
            cases: self.cases,
            worst: self.worst,
            worst_case: self.worst_case,
            criterion: self.criterion,
        }
    }
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish and NaN when either is
/// not finite.
pub fn rel_err(a: f64, b: f64) -> f64 {
    if !a.is_finite() || !b.is_finite() {
        return f64::NAN;
    }
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn grid() -> impl Iterator<Item = (f64, f64)> {
    K_GRID.flat_map(|k| R_GRID.iter().map(move |&r| (k as f64, r)))
}

/// Recursion, summation, difference, ratio, inversion, inverse-difference,
/// the averaging-coefficient closed form, and integer products.
pub fn facpow_suite(eval: Evaluator) -> Vec<CheckResult> {
    let tol = Criterion::MaxRelError(1e-10);
    let mut out = Vec::new();

    let mut t = Tracker::new("recursion in k", tol);
    for (k, r) in grid() {
        t.rel(eval(k + 1.0, r), (k + r) / k * eval(k, r), || format!("k={k} r={r}"));
    }
    out.push(t.finish());

    let mut t = Tracker::new("recursion in r", tol);
    for (k, r) in grid() {
        t.rel(eval(k + 1.0, r), (k + r) * eval(k + 1.0, r - 1.0), || format!("k={k} r={r}"));
    }
    out.push(t.finish());

    let mut t = Tracker::new("summation vs brute force", Criterion::MaxRelError(1e-9));
    for a in [1u32, 2, 5] {
        for &r in &R_GRID {
            let mut brute = 0.0;
            for b in a..=200 {
                brute += eval(b as f64, r);
                let closed = (eval(b as f64, r + 1.0) - eval((a - 1) as f64, r + 1.0)) / (r + 1.0);
                t.rel(closed, brute, || format!("a={a} b={b} r={r}"));
            }
        }
    }
    out.push(t.finish());

    let mut t = Tracker::new("difference", tol);
    for (k, r) in grid() {
        t.rel(eval(k + 1.0, r) - eval(k, r), r * eval(k + 1.0, r - 1.0), || format!("k={k} r={r}"));
    }
    out.push(t.finish());

    let mut t = Tracker::new("ratio", tol);
    for (k, r) in grid() {
        for &q in &R_GRID {
            if k + r + q <= 0.0 {
                continue;
            }
            t.rel(eval(k, r + q) / eval(k, r), eval(k + r, q), || format!("k={k} r={r} q={q}"));
        }
    }
    out.push(t.finish());

    let mut t = Tracker::new("inversion", tol);
    for (k, r) in grid().filter(|&(k, r)| k > r) {
        t.rel(eval(k, -r), 1.0 / eval(k - r, r), || format!("k={k} r={r}"));
    }
    out.push(t.finish());

    let mut t = Tracker::new("inverse difference (half powers)", tol);
    for k in 1..=1000 {
        let k = k as f64;
        let lhs = 1.0 / eval(k + 1.0, -0.5) - 1.0 / eval(k, -0.5);
        t.rel(lhs, 0.5 / eval(k, 0.5), || format!("k={k}"));
    }
    out.push(t.finish());

    let mut t = Tracker::new("averaging coefficient closed form", tol);
    for k in 1..=100 {
        for j in [0u32, 1, 3] {
            for r in [0.0, 0.5, 1.0, 3.0] {
                let c = |i: f64| (r + 1.0) / (i + j as f64 + r);
                let kf = k as f64;
                let kj = kf + j as f64;
                let lhs = (1.0 - c(kf)) / c(kf) * eval(kj, r);
                let rhs = eval(kj - 1.0, r) / c(kf - 1.0);
                t.rel(lhs, rhs, || format!("k={k} j={j} r={r}"));
            }
        }
    }
    out.push(t.finish());

    let mut t = Tracker::new("integer arguments match products", tol);
    for k in 1..=20u32 {
        for r in 0..=8u32 {
            let product: f64 = (0..r).map(|i| (k + i) as f64).product();
            t.rel(eval(k as f64, r as f64), product, || format!("k={k} r={r}"));
        }
    }
    out.push(t.finish());

    let mut t = Tracker::new("averaging weights sum to one", Criterion::MaxRelError(1e-12));
    for &r in &R_GRID {
        let mut partial = 0.0;
        for k in 0..=500u32 {
            partial += eval(k as f64 + 1.0, r);
            let total = (r + 1.0) * partial / eval(k as f64 + 1.0, r + 1.0);
            t.rel(total, 1.0, || format!("k={k} r={r}"));
        }
    }
    out.push(t.finish());

    out
}

/// Half-power sandwich bounds for `k ≤ 10⁴` and the comparison of the
/// half-power SGDM bound against its square-root relaxation.
pub fn sandwich_suite(eval: Evaluator) -> Vec<CheckResult> {
    const K_MAX: u32 = 10_000;
    let mut out = Vec::new();
    let nonstrict = Criterion::MinSlack { strict: false };
    let strict = Criterion::MinSlack { strict: true };

    let mut lower = Tracker::new("sqrt(k-1/2) <= k^(1/2)", nonstrict);
    let mut upper = Tracker::new("k^(1/2) <= sqrt(k)", nonstrict);
    let mut neg_lower = Tracker::new("1/sqrt(k-1/2) < k^(-1/2)", strict);
    let mut neg_upper = Tracker::new("k^(-1/2) < 1/sqrt(k-1)", strict);
    for k in 1..=K_MAX {
        let kf = k as f64;
        let half = eval(kf, 0.5);
        let neg_half = eval(kf, -0.5);
        let case = || format!("k={k}");
        lower.below((kf - 0.5).sqrt(), half, case);
        upper.below(half, kf.sqrt(), case);
        neg_lower.below(1.0 / (kf - 0.5).sqrt(), neg_half, case);
        if k >= 2 {
            neg_upper.below(neg_half, 1.0 / (kf - 1.0).sqrt(), case);
        }
    }
    out.extend([lower.finish(), upper.finish(), neg_lower.finish(), neg_upper.finish()]);

    let mut t = Tracker::new("half-power bound below sqrt relaxation", strict);
    for n in 1..=K_MAX {
        let nf = n as f64;
        let factorial = 2f64.sqrt() * eval(nf + 2.0, -0.5);
        let relaxed = 2f64.sqrt() / (nf + 1.0).sqrt();
        t.below(factorial, relaxed, || format!("n={n}"));
    }
    out.push(t.finish());
    out
}

/// Weighted-sum vs moving-average forms, and the momentum to iterate
/// averaging transform replayed on a stochastic quadratic.
pub fn averaging_suite() -> Vec<CheckResult> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_a7e2);

    let mut t = Tracker::new("weighted and moving averages agree", Criterion::MaxRelError(1e-10));
    for r in [-0.5, 0.0, 0.5, 1.0, 3.0] {
        let points: Vec<DVector<f64>> = (0..100)
            .map(|_| DVector::from_fn(10, |_, _| StandardNormal.sample(&mut rng)))
            .collect();
        let mut moving = DVector::zeros(10);
        for k in 0..points.len() {
            moving = moving_average_step(&moving, &points[k], k, r);
            let weighted = weighted_average(&points[..=k], r).expect("valid order");
            let err = (&moving - &weighted).norm() / weighted.norm().max(f64::MIN_POSITIVE);
            t.record(err, || format!("r={r} k={k}"));
        }
    }
    out.push(t.finish());

    let mut t = Tracker::new("momentum equals iterate averaging (200 steps)", Criterion::MaxRelError(1e-8));
    let problem = random_quadratic(40, 20, 0.0, 0xbead).expect("well-conditioned instance");
    let configs: [(f64, fn(usize) -> f64, f64); 3] = [
        (0.9, |_| 0.05, 0.1),
        (0.5, |k| 0.1 / (1.0 + 0.01 * k as f64), 0.3),
        (0.8, |k| 0.04 / (1.0 + 0.1 * k as f64).sqrt(), 0.15),
    ];
    for (idx, (beta, alpha, c1)) in configs.into_iter().enumerate() {
        let x0 = DVector::from_fn(20, |_, _| StandardNormal.sample(&mut rng));
        let deviation = momentum_iam_deviation(&problem, beta, alpha, c1, &x0, 200, 1000 + idx as u64);
        t.record(deviation, || format!("beta={beta} c1={c1}"));
    }
    out.push(t.finish());
    out
}

/// Runs classical momentum `m' = βm + (1−β)g`, `x' = x − α_k m'` and the
/// transformed iterate-averaging method on identical gradient streams, and
/// returns `max_k ‖x_k − x_k'‖∞ / max(1, ‖x_k‖∞)`.
pub fn momentum_iam_deviation(
    problem: &dyn Problem,
    beta: f64,
    alpha: fn(usize) -> f64,
    c1: f64,
    x0: &DVector<f64>,
    steps: usize,
    seed: u64,
) -> f64 {
    let Ok(params) = momentum_to_iam(MomentumParams { beta, alpha, c1 }) else {
        return f64::NAN;
    };
    let mut rng_a = ChaCha8Rng::seed_from_u64(seed);
    let mut rng_b = ChaCha8Rng::seed_from_u64(seed);
    let mut x = x0.clone();
    let mut m = DVector::zeros(x0.len());
    let mut iam = SgdmState::new(x0.clone());
    let mut worst: f64 = 0.0;
    for (k, pair) in params.take(steps).enumerate() {
        let Ok((eta, c_next)) = pair else {
            return f64::NAN;
        };
        let g = problem.stochastic_subgradient(&x, &mut rng_a);
        m = &m * beta + g * (1.0 - beta);
        x -= &m * alpha(k);
        iam = match sgdm_step(iam, problem, eta, c_next, &mut rng_b) {
            Ok(s) => s,
            Err(_) => return f64::NAN,
        };
        worst = worst.max((&x - &iam.x).amax() / x.amax().max(1.0));
    }
    worst
}

/// All suites with the library evaluator.
pub fn run_all() -> Vec<CheckResult> {
    let mut out = facpow_suite(&library_evaluator);
    out.extend(sandwich_suite(&library_evaluator));
    out.extend(averaging_suite());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rel_err_conventions() {
        assert_eq!(rel_err(0.0, 0.0), 0.0);
        assert_eq!(rel_err(2.0, 1.0), 0.5);
        assert_eq!(rel_err(-4.0, 4.0), 2.0);
        assert!(rel_err(f64::NAN, 1.0).is_nan());
    }

    #[test]
    fn nan_is_never_a_pass() {
        let mut t = Tracker::new("x", Criterion::MaxRelError(1.0));
        t.rel(1.0, 1.0, || "a".into());
        t.rel(f64::NAN, 1.0, || "b".into());
        t.rel(1.0, 1.5, || "c".into());
        let r = t.finish();
        assert!(!r.passed());
        assert_eq!(r.worst_case, "b");
    }
}
