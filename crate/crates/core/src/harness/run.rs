use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use super::config::{MethodKind, ProblemKind, RunConfig};
use super::trace::{Trace, TraceRow, ValueKind};
use super::{seed_stream, HarnessError};
use crate::optimizers::{
    cond_grad_step, dual_avg_step, nesterov_step, preset_sgdm_factorial, preset_sgdm_nonsmooth,
    preset_sgdm_sqrt_baseline, preset_sgdm_strongly_convex, preset_svrgm_convex, preset_svrgm_strongly_convex,
    sgdm_step, svrgm_epoch, svrgm_lyapunov, BallLmo, BetaSource, BoundConstants, BoundKind, BoundSpec,
    CondGradSource, CondGradState, DualAvgState, GapAccumulator, NesterovState, OptimError, SgdmSchedules,
    SgdmState, SvrgmParams, SvrgmState,
};
use crate::problems::{
    fixture_dataset, make_distance_problem, make_multiclass_svm, random_quadratic, read_libsvm, Constants, Problem,
};

#[derive(Debug, Clone)]
enum Plan {
    Sgdm,
    Nesterov,
    Svrgm(SvrgmParams),
    DualAvg { source: BetaSource, gamma: f64 },
    CondGrad { source: CondGradSource, lmo: BallLmo },
}

/// A validated config with its problem instance built. Runs for different
/// seeds can share one `Experiment`.
pub struct Experiment {
    config: RunConfig,
    problem: Box<dyn Problem>,
    x0: DVector<f64>,
    f_ref: Option<f64>,
    plan: Plan,
    bound: Option<BoundSpec>,
}

fn constant_by_name(c: &Constants, name: &str) -> Option<f64> {
    c.entries().into_iter().find(|(n, _)| *n == name).map(|(_, v)| v)
}

pub fn build_problem(config: &RunConfig) -> Result<Box<dyn Problem>, HarnessError> {
    Ok(match config.problem {
        ProblemKind::Quadratic => {
            let dim = config.dim.unwrap_or(1);
            let rows = config.rows.unwrap_or(2 * dim);
            Box::new(random_quadratic(
                rows,
                dim,
                config.ridge.unwrap_or(0.0),
                config.instance_seed.unwrap_or(0),
            )?)
        }
        ProblemKind::Distance => {
            let dim = config.dim.unwrap_or(1);
            let mut x_star = DVector::zeros(dim);
            x_star[0] = config.target_norm.unwrap_or(0.5);
            Box::new(make_distance_problem(
                x_star,
                config.lipschitz.unwrap_or(1.0),
                config.radius.unwrap_or(1.0),
            )?)
        }
        ProblemKind::Svm => {
            let data = match config.dataset.as_deref() {
                Some("fixture") | None => fixture_dataset(),
                Some(path) => read_libsvm(path.as_ref())?,
            };
            let svm = make_multiclass_svm(data, config.weight_decay.unwrap_or(0.001))?;
            Box::new(match config.radius {
                Some(r) => svm.with_radius(r)?,
                None => svm,
            })
        }
    })
}

/// The bound a method/schedule pair is usually checked against.
pub fn default_bound(method: MethodKind, schedule: &str) -> Option<BoundKind> {
    match (method, schedule) {
        (MethodKind::Sgdm, "nonsmooth") => Some(BoundKind::SgdmNonsmooth),
        (MethodKind::Sgdm, "sqrt") => Some(BoundKind::SgdmSqrt),
        (MethodKind::Sgdm, "strongly-convex") => Some(BoundKind::SgdmStronglyConvex),
        (MethodKind::Nesterov, _) => Some(BoundKind::Nesterov),
        (MethodKind::Svrgm, "convex") => Some(BoundKind::SvrgmConvex),
        (MethodKind::Svrgm, _) => Some(BoundKind::SvrgmStronglyConvex),
        (MethodKind::DualAvg, "factorial") => Some(BoundKind::DualAvgFactorial),
        (MethodKind::DualAvg, _) => Some(BoundKind::DualAvgRecursive),
        _ => None,
    }
}

impl Experiment {
    /// Builds the problem and checks every constant the method needs before
    /// anything runs.
    pub fn prepare(config: &RunConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let problem = build_problem(config)?;
        let consts = problem.constants().clone();
        let schedule = config.schedule();

        let missing: Vec<&'static str> = config
            .method
            .required_constants(schedule)
            .iter()
            .copied()
            .filter(|n| constant_by_name(&consts, n).is_none())
            .collect();
        if !missing.is_empty() {
            return Err(HarnessError::MissingConstants {
                method: format!("{} ({schedule})", config.method.id()),
                missing,
            });
        }
        let need = |n: &str| constant_by_name(&consts, n).expect("checked above");

        let plan = match config.method {
            MethodKind::Sgdm => Plan::Sgdm,
            MethodKind::Nesterov => Plan::Nesterov,
            MethodKind::Svrgm => Plan::Svrgm(match schedule {
                "convex" => preset_svrgm_convex(need("L_component"), config.m0.unwrap_or(need("n_components") as usize))?,
                _ => preset_svrgm_strongly_convex(need("L_component"), need("mu_component"))?,
            }),
            MethodKind::DualAvg => {
                let (g, r) = (need("G"), need("R"));
                let (source, default_gamma) = match schedule {
                    "factorial" => (BetaSource::Factorial, g / r),
                    _ => (BetaSource::Recursive, g / (2f64.sqrt() * r)),
                };
                Plan::DualAvg {
                    source,
                    gamma: config.gamma.unwrap_or(default_gamma),
                }
            }
            MethodKind::CondGrad => Plan::CondGrad {
                source: match schedule {
                    "open-loop" => CondGradSource::OpenLoop,
                    "inverse-k" => CondGradSource::InverseK,
                    _ => CondGradSource::Factorial,
                },
                lmo: BallLmo { radius: need("R") },
            },
        };

        let x0 = DVector::zeros(problem.dim());
        let f_ref = problem.value_at_opt().or(config.f_star);
        let mut exp = Self {
            config: config.clone(),
            problem,
            x0,
            f_ref,
            plan,
            bound: None,
        };
        exp.bound = exp.resolve_bound()?;
        Ok(exp)
    }

    fn resolve_bound(&self) -> Result<Option<BoundSpec>, HarnessError> {
        let explicit = match self.config.bound.as_deref() {
            Some("none") => return Ok(None),
            Some(id) => Some(id.parse::<BoundKind>()?),
            None => None,
        };
        let Some(kind) = explicit.or_else(|| default_bound(self.config.method, self.config.schedule())) else {
            return Ok(None);
        };
        if self.value_kind() == ValueKind::Value {
            return match explicit {
                Some(_) => Err(HarnessError::Config {
                    field: "bound".into(),
                    msg: "the problem has no known optimum; set f_star to record gaps".into(),
                }),
                None => Ok(None),
            };
        }
        match BoundSpec::new(kind, self.bound_constants()) {
            Ok(spec) => Ok(Some(spec)),
            Err(OptimError::MissingConstants(missing)) if explicit.is_some() => Err(HarnessError::MissingConstants {
                method: format!("bound {kind}"),
                missing,
            }),
            Err(OptimError::MissingConstants(_)) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Problem constants plus the start-dependent `D0` and `gap0`. SVRGM
    /// bounds use the per-component constants its preset was built from.
    pub fn bound_constants(&self) -> BoundConstants {
        let c = self.problem.constants();
        let mut b = BoundConstants {
            g: c.g,
            l: c.l,
            mu: c.mu,
            r: c.r,
            d0: self.problem.minimizer().map(|xs| (&self.x0 - xs).norm()),
            gap0: self.f_ref.map(|f| self.problem.value(&self.x0) - f),
            m0: None,
        };
        if let Plan::Svrgm(p) = &self.plan {
            b.l = Some(p.l);
            b.mu = p.mu;
            b.m0 = Some(p.m0 as f64);
        }
        b
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn problem(&self) -> &dyn Problem {
        self.problem.as_ref()
    }

    pub fn bound(&self) -> Option<&BoundSpec> {
        self.bound.as_ref()
    }

    pub fn value_kind(&self) -> ValueKind {
        if self.f_ref.is_some() || self.config.method == MethodKind::DualAvg {
            ValueKind::Gap
        } else {
            ValueKind::Value
        }
    }

    fn measure(&self, x: &DVector<f64>) -> f64 {
        let v = self.problem.value(x);
        self.f_ref.map_or(v, |f| v - f)
    }

    fn full_grad_cost(&self) -> u64 {
        self.problem.constants().n_components.unwrap_or(1) as u64
    }

    fn sgdm_schedules(&self) -> Result<SgdmSchedules, HarnessError> {
        let c = self.problem.constants();
        let (g, r, mu) = (c.g.unwrap_or(0.0), c.r.unwrap_or(0.0), c.mu.unwrap_or(0.0));
        Ok(match self.config.schedule() {
            "nonsmooth" => preset_sgdm_nonsmooth(g, r)?,
            "sqrt" => preset_sgdm_sqrt_baseline(g, r)?,
            "strongly-convex" => preset_sgdm_strongly_convex(mu)?,
            _ => preset_sgdm_factorial(mu, self.config.momentum_r.unwrap_or(3.0))?,
        })
    }

    /// Runs with the stream for the config's own seed.
    pub fn run(&self) -> Result<Trace, HarnessError> {
        self.run_with(&mut seed_stream(self.config.seed, 0))
    }

    /// Runs with an explicit RNG. Deterministic methods ignore it.
    pub fn run_with(&self, rng: &mut ChaCha8Rng) -> Result<Trace, HarnessError> {
        let mut rec = Recorder::new(self.config.stride(), self.config.horizon(), self.bound.as_ref());
        match &self.plan {
            Plan::Sgdm => self.run_sgdm(&mut rec, rng)?,
            Plan::Nesterov => self.run_nesterov(&mut rec)?,
            Plan::Svrgm(params) => self.run_svrgm(&mut rec, params, rng)?,
            Plan::DualAvg { source, gamma } => self.run_dual_avg(&mut rec, *source, *gamma)?,
            Plan::CondGrad { source, lmo } => self.run_cond_grad(&mut rec, *source, lmo)?,
        }
        let trace = Trace {
            rows: rec.rows,
            value_kind: self.value_kind(),
            bound: self.bound.as_ref().map(|b| b.kind),
            bound_constants: self
                .bound
                .as_ref()
                .map_or_else(|| self.bound_constants(), |b| b.constants.clone()),
            problem_constants: self.problem.constants().entries(),
        };
        debug_assert!(trace.validate().is_ok());
        Ok(trace)
    }

    fn run_sgdm(&self, rec: &mut Recorder, rng: &mut dyn RngCore) -> Result<(), HarnessError> {
        let SgdmSchedules { mut eta, mut c } = self.sgdm_schedules()?;
        let mut state = SgdmState::new(self.x0.clone());
        rec.record(0, 0, self.measure(&state.x), BTreeMap::new())?;
        for k in 0..rec.horizon {
            let exhausted = || HarnessError::Step {
                step: k,
                source: OptimError::ScheduleExhausted(k as usize),
            };
            let e = eta.next().ok_or_else(exhausted)?;
            let ck = c.next().ok_or_else(exhausted)?;
            state = sgdm_step(state, self.problem(), e, ck, rng).map_err(|source| HarnessError::Step { step: k, source })?;
            if rec.due(k + 1) {
                let diag = BTreeMap::from([("eta".to_string(), e), ("c".to_string(), ck)]);
                rec.record(k + 1, k + 1, self.measure(&state.x), diag)?;
            }
        }
        Ok(())
    }

    fn run_nesterov(&self, rec: &mut Recorder) -> Result<(), HarnessError> {
        let cost = self.full_grad_cost();
        let mut state = NesterovState::new(self.x0.clone());
        rec.record(0, 0, self.measure(&state.x), BTreeMap::new())?;
        for k in 0..rec.horizon {
            state = nesterov_step(state, self.problem()).map_err(|source| HarnessError::Step { step: k, source })?;
            if rec.due(k + 1) {
                rec.record(k + 1, (k + 1) * cost, self.measure(&state.x), BTreeMap::new())?;
            }
        }
        Ok(())
    }

    fn run_svrgm(&self, rec: &mut Recorder, params: &SvrgmParams, rng: &mut dyn RngCore) -> Result<(), HarnessError> {
        let mut state = SvrgmState::new(self.x0.clone(), params.m0);
        let diag = |state: &SvrgmState| {
            let mut d = BTreeMap::from([("epoch_len".to_string(), state.m as f64)]);
            if let Ok(v) = svrgm_lyapunov(state, self.problem(), params) {
                d.insert("lyapunov".to_string(), v);
            }
            d
        };
        rec.record(0, 0, self.measure(&state.x), diag(&state))?;
        for s in 0..rec.horizon {
            state =
                svrgm_epoch(state, self.problem(), params, rng).map_err(|source| HarnessError::Step { step: s, source })?;
            if rec.due(s + 1) {
                rec.record(s + 1, state.grad_evals, self.measure(&state.x), diag(&state))?;
            }
        }
        Ok(())
    }

    /// The `f_gap` column holds the duality gap over the `R`-ball of the
    /// pairs `(x_i, ∇f(x_i))`, `i = 0..=n`; the objective gap is kept as a
    /// diagnostic when the optimum is known.
    fn run_dual_avg(&self, rec: &mut Recorder, source: BetaSource, gamma: f64) -> Result<(), HarnessError> {
        let cost = self.full_grad_cost();
        let radius = self.problem.constants().r.expect("checked in prepare");
        let mut acc = GapAccumulator::new(self.problem.dim(), radius);
        let mut state = DualAvgState::new(self.x0.clone(), source)?;
        let observe = |state: &DualAvgState, acc: &GapAccumulator| {
            let mut peek = acc.clone();
            peek.push(&state.x, &self.problem.full_gradient(&state.x));
            let mut d = BTreeMap::from([("beta".to_string(), state.beta)]);
            if let Some(f) = self.f_ref {
                d.insert("f_gap".to_string(), self.problem.value(&state.x) - f);
            }
            (peek.value(), d)
        };
        let (gap, d) = observe(&state, &acc);
        rec.record(0, cost, gap, d)?;
        for k in 0..rec.horizon {
            let x_k = state.x.clone();
            let (next, g) =
                dual_avg_step(state, self.problem(), gamma, &self.x0).map_err(|source| HarnessError::Step { step: k, source })?;
            acc.push(&x_k, &g);
            state = next;
            if rec.due(k + 1) {
                let (gap, d) = observe(&state, &acc);
                rec.record(k + 1, (k + 2) * cost, gap, d)?;
            }
        }
        Ok(())
    }

    fn run_cond_grad(&self, rec: &mut Recorder, source: CondGradSource, lmo: &BallLmo) -> Result<(), HarnessError> {
        let cost = self.full_grad_cost();
        let mut state = CondGradState::new(self.x0.clone(), source);
        rec.record(0, 0, self.measure(&state.x), BTreeMap::new())?;
        for k in 0..rec.horizon {
            let c = state.c;
            state = cond_grad_step(state, self.problem(), lmo);
            if rec.due(k + 1) {
                let diag = BTreeMap::from([("c".to_string(), c)]);
                rec.record(k + 1, (k + 1) * cost, self.measure(&state.x), diag)?;
            }
        }
        Ok(())
    }
}

struct Recorder<'a> {
    stride: u64,
    horizon: u64,
    bound: Option<&'a BoundSpec>,
    rows: Vec<TraceRow>,
}

impl<'a> Recorder<'a> {
    fn new(stride: u64, horizon: u64, bound: Option<&'a BoundSpec>) -> Self {
        let cap = (horizon / stride.max(1) + 2).min(1 << 20) as usize;
        Self {
            stride: stride.max(1),
            horizon,
            bound,
            rows: Vec::with_capacity(cap),
        }
    }

    fn due(&self, step: u64) -> bool {
        step % self.stride == 0 || step == self.horizon
    }

    fn record(&mut self, step: u64, grad_evals: u64, f_gap: f64, diagnostics: BTreeMap<String, f64>) -> Result<(), HarnessError> {
        let bound = match self.bound {
            Some(b) => Some(b.value(step).map_err(|source| HarnessError::Step { step, source })?),
            None => None,
        };
        self.rows.push(TraceRow {
            step,
            grad_evals,
            f_gap,
            bound,
            diagnostics,
        });
        Ok(())
    }
}

/// Validates, builds and runs a config.
pub fn run(config: &RunConfig) -> Result<Trace, HarnessError> {
    Experiment::prepare(config)?.run()
}
