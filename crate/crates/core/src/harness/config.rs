use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Seeded random least squares with optional ridge term.
    Quadratic,
    /// `G‖x − x*‖` on the origin ball of radius `R`.
    Distance,
    /// Multiclass hinge loss on a LIBSVM dataset.
    Svm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    Sgdm,
    Nesterov,
    Svrgm,
    DualAvg,
    CondGrad,
}

impl MethodKind {
    pub fn id(self) -> &'static str {
        match self {
            MethodKind::Sgdm => "sgdm",
            MethodKind::Nesterov => "nesterov",
            MethodKind::Svrgm => "svrgm",
            MethodKind::DualAvg => "dual-avg",
            MethodKind::CondGrad => "cond-grad",
        }
    }

    /// Accepted `schedule` values; the first is the default.
    pub fn schedules(self) -> &'static [&'static str] {
        match self {
            MethodKind::Sgdm => &["nonsmooth", "sqrt", "strongly-convex", "factorial"],
            MethodKind::Nesterov => &["default"],
            MethodKind::Svrgm => &["convex", "strongly-convex"],
            MethodKind::DualAvg => &["factorial", "recursive"],
            MethodKind::CondGrad => &["factorial", "open-loop", "inverse-k"],
        }
    }

    /// Problem constants the method's parameters are derived from.
    pub fn required_constants(self, schedule: &str) -> &'static [&'static str] {
        match (self, schedule) {
            (MethodKind::Sgdm, "nonsmooth" | "sqrt") => &["G", "R"],
            (MethodKind::Sgdm, _) => &["mu"],
            (MethodKind::Nesterov, _) => &["L"],
            (MethodKind::Svrgm, "convex") => &["n_components", "L_component"],
            (MethodKind::Svrgm, _) => &["n_components", "L_component", "mu_component"],
            (MethodKind::DualAvg, _) => &["G", "R"],
            (MethodKind::CondGrad, _) => &["R"],
        }
    }
}

/// One experiment, read from flat TOML. Unknown keys are rejected.
///
/// ```toml
/// problem = "distance"
/// dim = 10
/// target_norm = 0.01
/// method = "sgdm"
/// schedule = "nonsmooth"
/// steps = 5000
/// stride = 50
/// seed = 7
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    /// Dimension for `quadratic` and `distance`.
    pub dim: Option<usize>,
    /// Quadratic rows (components); defaults to `2·dim`.
    pub rows: Option<usize>,
    /// Seed of the random quadratic instance.
    pub instance_seed: Option<u64>,
    pub ridge: Option<f64>,
    /// Ball radius for `distance`, or an override of the SVM constraint.
    pub radius: Option<f64>,
    /// `G` of the distance problem.
    pub lipschitz: Option<f64>,
    /// `‖x*‖` of the distance problem; `x*` lies along the first axis.
    pub target_norm: Option<f64>,
    /// `"fixture"` or a LIBSVM path, relative to the config file.
    pub dataset: Option<String>,
    pub weight_decay: Option<f64>,
    /// Reference optimum used when the problem has no known `f*`.
    pub f_star: Option<f64>,

    pub method: MethodKind,
    pub schedule: Option<String>,
    /// Momentum order for `schedule = "factorial"`.
    pub momentum_r: Option<f64>,
    /// Dual averaging regularization; defaults depend on the `β̂` source.
    pub gamma: Option<f64>,
    pub steps: Option<u64>,
    pub epochs: Option<u64>,
    /// First SVRGM epoch length for the convex preset.
    pub m0: Option<usize>,
    /// Bound id for the `bound` column, or `"none"`.
    pub bound: Option<String>,

    #[serde(default)]
    pub seed: u64,
    pub stride: Option<u64>,
    pub out: Option<PathBuf>,
}

fn config_err(field: &str, msg: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        field: field.to_string(),
        msg: msg.into(),
    }
}

/// Best-effort key name for a deserialization error: a backquoted field
/// name in the message, else the key on the line the error points at.
fn toml_error_field(text: &str, e: &toml::de::Error) -> String {
    let msg = e.message();
    if msg.contains("field `") {
        if let Some(name) = msg.split('`').nth(1) {
            return name.to_string();
        }
    }
    if let Some(span) = e.span() {
        let start = text[..span.start.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
        let line = text[start..].lines().next().unwrap_or("");
        if let Some((key, _)) = line.split_once('=') {
            let key = key.trim();
            if !key.is_empty() {
                return key.to_string();
            }
        }
    }
    "<config>".to_string()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Config {
            field: toml_error_field(text, &e),
            msg: e.message().trim().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file. A relative `dataset` path is resolved against the
    /// file's directory.
    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(ds) = cfg.dataset.as_mut() {
            if ds != "fixture" && Path::new(ds.as_str()).is_relative() {
                if let Some(dir) = path.parent() {
                    *ds = dir.join(&*ds).to_string_lossy().into_owned();
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn schedule(&self) -> &str {
        self.schedule.as_deref().unwrap_or(self.method.schedules()[0])
    }

    pub fn stride(&self) -> u64 {
        self.stride.unwrap_or(1)
    }

    /// Number of iterations: `epochs` for SVRGM, `steps` otherwise.
    pub fn horizon(&self) -> u64 {
        match self.method {
            MethodKind::Svrgm => self.epochs.unwrap_or(0),
            _ => self.steps.unwrap_or(0),
        }
    }

    /// Field-level checks that do not need the problem instance.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let positive = |field: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(config_err(field, format!("must be positive, got {x}"))),
            _ => Ok(()),
        };
        let forbid = |field: &str, present: bool, why: &str| {
            if present {
                Err(config_err(field, format!("not used {why}")))
            } else {
                Ok(())
            }
        };

        match self.problem {
            ProblemKind::Quadratic => {
                let dim = self.dim.ok_or_else(|| config_err("dim", "required for problem = \"quadratic\""))?;
                if dim == 0 {
                    return Err(config_err("dim", "must be at least 1"));
                }
                if let Some(rows) = self.rows {
                    if rows == 0 {
                        return Err(config_err("rows", "must be at least 1"));
                    }
                }
                match self.ridge {
                    Some(r) if !(r >= 0.0 && r.is_finite()) => {
                        return Err(config_err("ridge", format!("must be nonnegative, got {r}")))
                    }
                    _ => {}
                }
                for (f, present) in [
                    ("radius", self.radius.is_some()),
                    ("lipschitz", self.lipschitz.is_some()),
                    ("target_norm", self.target_norm.is_some()),
                    ("dataset", self.dataset.is_some()),
                    ("weight_decay", self.weight_decay.is_some()),
                    ("f_star", self.f_star.is_some()),
                ] {
                    forbid(f, present, "with problem = \"quadratic\"")?;
                }
            }
            ProblemKind::Distance => {
                let dim = self.dim.ok_or_else(|| config_err("dim", "required for problem = \"distance\""))?;
                if dim == 0 {
                    return Err(config_err("dim", "must be at least 1"));
                }
                positive("radius", self.radius)?;
                positive("lipschitz", self.lipschitz)?;
                match self.target_norm {
                    Some(t) if !(t >= 0.0 && t.is_finite()) => {
                        return Err(config_err("target_norm", format!("must be nonnegative, got {t}")))
                    }
                    _ => {}
                }
                for (f, present) in [
                    ("rows", self.rows.is_some()),
                    ("instance_seed", self.instance_seed.is_some()),
                    ("ridge", self.ridge.is_some()),
                    ("dataset", self.dataset.is_some()),
                    ("weight_decay", self.weight_decay.is_some()),
                    ("f_star", self.f_star.is_some()),
                ] {
                    forbid(f, present, "with problem = \"distance\"")?;
                }
            }
            ProblemKind::Svm => {
                if self.dataset.is_none() {
                    return Err(config_err("dataset", "required for problem = \"svm\" (a path or \"fixture\")"));
                }
                positive("radius", self.radius)?;
                match self.weight_decay {
                    Some(w) if !(w >= 0.0 && w.is_finite()) => {
                        return Err(config_err("weight_decay", format!("must be nonnegative, got {w}")))
                    }
                    _ => {}
                }
                if let Some(f) = self.f_star {
                    if !f.is_finite() {
                        return Err(config_err("f_star", "must be finite"));
                    }
                }
                for (f, present) in [
                    ("dim", self.dim.is_some()),
                    ("rows", self.rows.is_some()),
                    ("instance_seed", self.instance_seed.is_some()),
                    ("ridge", self.ridge.is_some()),
                    ("lipschitz", self.lipschitz.is_some()),
                    ("target_norm", self.target_norm.is_some()),
                ] {
                    forbid(f, present, "with problem = \"svm\"")?;
                }
            }
        }

        let schedule = self.schedule();
        if !self.method.schedules().contains(&schedule) {
            return Err(config_err(
                "schedule",
                format!(
                    "{schedule:?} is not a {} schedule; expected one of {}",
                    self.method.id(),
                    self.method.schedules().join(", ")
                ),
            ));
        }
        match self.momentum_r {
            Some(_) if !(self.method == MethodKind::Sgdm && schedule == "factorial") => {
                return Err(config_err("momentum_r", "only used with method = \"sgdm\", schedule = \"factorial\""))
            }
            Some(r) if !(r > -1.0 && r.is_finite()) => {
                return Err(config_err("momentum_r", format!("must exceed -1, got {r}")))
            }
            None if self.method == MethodKind::Sgdm && schedule == "factorial" => {
                return Err(config_err("momentum_r", "required with schedule = \"factorial\""))
            }
            _ => {}
        }
        forbid("gamma", self.gamma.is_some() && self.method != MethodKind::DualAvg, "unless method = \"dual-avg\"")?;
        positive("gamma", self.gamma)?;

        if self.method == MethodKind::Svrgm {
            if self.epochs.is_none() {
                return Err(config_err("epochs", "required for method = \"svrgm\""));
            }
            forbid("steps", self.steps.is_some(), "with method = \"svrgm\"; use epochs")?;
            match (schedule, self.m0) {
                ("strongly-convex", Some(_)) => {
                    return Err(config_err("m0", "fixed by the strongly-convex preset"));
                }
                (_, Some(0)) => return Err(config_err("m0", "must be at least 1")),
                _ => {}
            }
        } else {
            if self.steps.is_none() {
                return Err(config_err("steps", format!("required for method = \"{}\"", self.method.id())));
            }
            forbid("epochs", self.epochs.is_some(), "unless method = \"svrgm\"")?;
            forbid("m0", self.m0.is_some(), "unless method = \"svrgm\"")?;
        }
        if self.stride == Some(0) {
            return Err(config_err("stride", "must be at least 1"));
        }
        if let Some(b) = self.bound.as_deref() {
            if b != "none" {
                b.parse::<crate::optimizers::BoundKind>()
                    .map_err(|e| config_err("bound", e.to_string()))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "problem = \"distance\"\ndim = 3\nmethod = \"sgdm\"\nsteps = 10\n";

    fn field_of(text: &str) -> String {
        match RunConfig::from_toml(text) {
            Err(HarnessError::Config { field, .. }) => field,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_and_defaults() {
        let c = RunConfig::from_toml(BASE).unwrap();
        assert_eq!(c.schedule(), "nonsmooth");
        assert_eq!(c.stride(), 1);
        assert_eq!(c.seed, 0);
        assert_eq!(c.horizon(), 10);
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(field_of(&format!("{BASE}colour = 1\n")), "colour");
        assert_eq!(field_of(&format!("{BASE}schedule = \"fast\"\n")), "schedule");
        assert_eq!(field_of(&format!("{BASE}radius = -1.0\n")), "radius");
        assert_eq!(field_of(&format!("{BASE}epochs = 3\n")), "epochs");
        assert_eq!(field_of(&format!("{BASE}bound = \"thm9\"\n")), "bound");
        assert_eq!(field_of(&format!("{BASE}stride = 0\n")), "stride");
        assert_eq!(field_of(&format!("{BASE}ridge = 1.0\n")), "ridge");
        assert_eq!(field_of(&format!("{BASE}momentum_r = 2.0\n")), "momentum_r");
        assert_eq!(field_of("problem = \"distance\"\nmethod = \"sgdm\"\nsteps = 1\n"), "dim");
        assert_eq!(field_of("problem = \"svm\"\nmethod = \"svrgm\"\ndataset = \"fixture\"\n"), "epochs");
        assert_eq!(
            field_of("problem = \"quadratic\"\ndim = 2\nmethod = \"sgdm\"\nschedule = \"factorial\"\nsteps = 1\n"),
            "momentum_r"
        );
    }

    #[test]
    fn wrong_types_are_reported() {
        assert_eq!(field_of("problem = \"distance\"\ndim = \"three\"\nmethod = \"sgdm\"\nsteps = 1\n"), "dim");
        assert_eq!(field_of("dim = 2\nmethod = \"sgdm\"\nsteps = 1\n"), "problem");
        let err = RunConfig::from_toml("problem = \"cube\"\nmethod = \"sgdm\"\n").unwrap_err();
        assert!(err.to_string().contains("cube"), "{err}");
    }
}
