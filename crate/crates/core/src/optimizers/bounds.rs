use std::fmt;
use std::str::FromStr;

use super::OptimError;
use crate::facpow::facpow;

/// Closed-form guarantees, named by the method and setting they cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    /// `√2 RG (n+2)^(−½‾)` for half-power SGDM on Lipschitz problems.
    SgdmNonsmooth,
    /// `√2 RG/√(n+1)` for square-root step sizes.
    SgdmSqrt,
    /// `2G²/(μ(n+1))` for cubic momentum on strongly convex problems.
    SgdmStronglyConvex,
    /// `2L D₀²/n^(2‾)`; infinite at `n = 0`.
    Nesterov,
    /// `gap₀/2^S + 9L D₀²/(2^S m₀)` after `S` epochs.
    SvrgmConvex,
    /// `(3/5)^S (gap₀ + (3/4) μ D₀²)` after `S` epochs.
    SvrgmStronglyConvex,
    /// `2RG (n+2)^(−½‾)` on the duality gap.
    DualAvgFactorial,
    /// `(√2/((1+√3)(n+1)) + 2/√(n+1)) RG` on the duality gap.
    DualAvgRecursive,
}

impl BoundKind {
    pub const ALL: [BoundKind; 8] = [
        BoundKind::SgdmNonsmooth,
        BoundKind::SgdmSqrt,
        BoundKind::SgdmStronglyConvex,
        BoundKind::Nesterov,
        BoundKind::SvrgmConvex,
        BoundKind::SvrgmStronglyConvex,
        BoundKind::DualAvgFactorial,
        BoundKind::DualAvgRecursive,
    ];

    pub fn id(self) -> &'static str {
        match self {
            BoundKind::SgdmNonsmooth => "sgdm-nonsmooth",
            BoundKind::SgdmSqrt => "sgdm-sqrt",
            BoundKind::SgdmStronglyConvex => "sgdm-strongly-convex",
            BoundKind::Nesterov => "nesterov",
            BoundKind::SvrgmConvex => "svrgm-convex",
            BoundKind::SvrgmStronglyConvex => "svrgm-strongly-convex",
            BoundKind::DualAvgFactorial => "dual-avg-factorial",
            BoundKind::DualAvgRecursive => "dual-avg-recursive",
        }
    }

    /// Constant names the evaluator reads.
    pub fn required(self) -> &'static [&'static str] {
        match self {
            BoundKind::SgdmNonsmooth
            | BoundKind::SgdmSqrt
            | BoundKind::DualAvgFactorial
            | BoundKind::DualAvgRecursive => &["G", "R"],
            BoundKind::SgdmStronglyConvex => &["G", "mu"],
            BoundKind::Nesterov => &["L", "D0"],
            BoundKind::SvrgmConvex => &["L", "D0", "gap0", "m0"],
            BoundKind::SvrgmStronglyConvex => &["mu", "D0", "gap0"],
        }
    }

    /// Whether `n` counts epochs rather than steps.
    pub fn per_epoch(self) -> bool {
        matches!(self, BoundKind::SvrgmConvex | BoundKind::SvrgmStronglyConvex)
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for BoundKind {
    type Err = OptimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| {
                let ids: Vec<_> = BoundKind::ALL.iter().map(|k| k.id()).collect();
                OptimError::Invalid(format!("unknown bound {s:?}; expected one of {}", ids.join(", ")))
            })
    }
}

/// Constants a bound may need. `d0` is `‖x_0 − x*‖` and `gap0` is
/// `f(x_0) − f*`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundConstants {
    pub g: Option<f64>,
    pub l: Option<f64>,
    pub mu: Option<f64>,
    pub r: Option<f64>,
    pub d0: Option<f64>,
    pub gap0: Option<f64>,
    pub m0: Option<f64>,
}

impl BoundConstants {
    pub const NAMES: [&'static str; 7] = ["G", "L", "mu", "R", "D0", "gap0", "m0"];

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "G" => self.g,
            "L" => self.l,
            "mu" => self.mu,
            "R" => self.r,
            "D0" => self.d0,
            "gap0" => self.gap0,
            "m0" => self.m0,
            _ => None,
        }
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), OptimError> {
        let slot = match name {
            "G" => &mut self.g,
            "L" => &mut self.l,
            "mu" => &mut self.mu,
            "R" => &mut self.r,
            "D0" => &mut self.d0,
            "gap0" => &mut self.gap0,
            "m0" => &mut self.m0,
            _ => {
                return Err(OptimError::Invalid(format!(
                    "unknown constant {name:?}; expected one of {}",
                    Self::NAMES.join(", ")
                )))
            }
        };
        *slot = Some(value);
        Ok(())
    }

    /// Present constants in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        Self::NAMES
            .iter()
            .filter_map(|&n| self.get(n).map(|v| (n, v)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundSpec {
    pub kind: BoundKind,
    pub constants: BoundConstants,
}

impl BoundSpec {
    /// Fails with every missing constant named.
    pub fn new(kind: BoundKind, constants: BoundConstants) -> Result<Self, OptimError> {
        let missing: Vec<&'static str> = kind
            .required()
            .iter()
            .copied()
            .filter(|n| constants.get(n).is_none())
            .collect();
        if missing.is_empty() {
            Ok(Self { kind, constants })
        } else {
            Err(OptimError::MissingConstants(missing))
        }
    }

    pub fn value(&self, n: u64) -> Result<f64, OptimError> {
        bound_value(self, n)
    }
}

/// Right-hand side of the bound at step (or epoch) `n`.
pub fn bound_value(spec: &BoundSpec, n: u64) -> Result<f64, OptimError> {
    let c = &spec.constants;
    let need = |name: &'static str| c.get(name).ok_or_else(|| OptimError::MissingConstants(vec![name]));
    let nf = n as f64;
    Ok(match spec.kind {
        BoundKind::SgdmNonsmooth => 2f64.sqrt() * need("R")? * need("G")? * facpow(nf + 2.0, -0.5)?,
        BoundKind::SgdmSqrt => 2f64.sqrt() * need("R")? * need("G")? / (nf + 1.0).sqrt(),
        BoundKind::SgdmStronglyConvex => 2.0 * need("G")?.powi(2) / (need("mu")? * (nf + 1.0)),
        BoundKind::Nesterov => {
            let (l, d0) = (need("L")?, need("D0")?);
            if n == 0 {
                f64::INFINITY
            } else {
                2.0 * l * d0 * d0 / facpow(nf, 2.0)?
            }
        }
        BoundKind::SvrgmConvex => {
            let (l, d0, gap0, m0) = (need("L")?, need("D0")?, need("gap0")?, need("m0")?);
            (gap0 + 9.0 * l * d0 * d0 / m0) * 0.5f64.powi(n as i32)
        }
        BoundKind::SvrgmStronglyConvex => {
            let (mu, d0, gap0) = (need("mu")?, need("D0")?, need("gap0")?);
            0.6f64.powi(n as i32) * (gap0 + 0.75 * mu * d0 * d0)
        }
        BoundKind::DualAvgFactorial => 2.0 * need("R")? * need("G")? * facpow(nf + 2.0, -0.5)?,
        BoundKind::DualAvgRecursive => {
            let k1 = nf + 1.0;
            (2f64.sqrt() / ((1.0 + 3f64.sqrt()) * k1) + 2.0 / k1.sqrt()) * need("R")? * need("G")?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(kind: BoundKind, pairs: &[(&str, f64)]) -> BoundSpec {
        let mut c = BoundConstants::default();
        for (n, v) in pairs {
            c.set(n, *v).unwrap();
        }
        BoundSpec::new(kind, c).unwrap()
    }

    #[test]
    fn ids_round_trip() {
        for k in BoundKind::ALL {
            assert_eq!(k.id().parse::<BoundKind>().unwrap(), k);
        }
        assert!("bogus".parse::<BoundKind>().is_err());
    }

    #[test]
    fn worked_values() {
        let nest = spec(BoundKind::Nesterov, &[("L", 3.0), ("D0", 2.0)]);
        assert_relative_eq!(nest.value(1).unwrap(), 3.0 * 4.0, max_relative = 1e-15);
        assert_eq!(nest.value(0).unwrap(), f64::INFINITY);
        assert_relative_eq!(nest.value(9).unwrap(), 2.0 * 12.0 / 90.0, max_relative = 1e-14);

        let sc = spec(BoundKind::SgdmStronglyConvex, &[("G", 2.0), ("mu", 0.5)]);
        assert_relative_eq!(sc.value(0).unwrap(), 16.0);
        for n in [0u64, 5, 100] {
            let alt = 2.0 * 4.0 / 0.5 * facpow(n as f64 + 2.0, -1.0).unwrap();
            assert_relative_eq!(sc.value(n).unwrap(), alt, max_relative = 1e-13);
        }

        let ns = spec(BoundKind::SgdmNonsmooth, &[("G", 1.0), ("R", 1.0)]);
        assert_relative_eq!(
            ns.value(0).unwrap(),
            2f64.sqrt() * std::f64::consts::PI.sqrt() / 2.0,
            max_relative = 1e-14
        );

        let sv = spec(BoundKind::SvrgmConvex, &[("L", 2.0), ("D0", 1.0), ("gap0", 4.0), ("m0", 3.0)]);
        assert_relative_eq!(sv.value(0).unwrap(), 10.0);
        assert_relative_eq!(sv.value(2).unwrap(), 2.5);
        let ss = spec(BoundKind::SvrgmStronglyConvex, &[("mu", 4.0), ("D0", 1.0), ("gap0", 2.0)]);
        assert_relative_eq!(ss.value(1).unwrap(), 3.0, max_relative = 1e-15);
    }

    #[test]
    fn missing_constants_are_named() {
        let mut c = BoundConstants::default();
        c.set("L", 1.0).unwrap();
        assert_eq!(
            BoundSpec::new(BoundKind::SvrgmConvex, c.clone()),
            Err(OptimError::MissingConstants(vec!["D0", "gap0", "m0"]))
        );
        assert!(c.set("sigma", 1.0).is_err());
    }

    #[test]
    fn evaluators_are_positive_and_nonincreasing() {
        let all = [("G", 1.3), ("L", 2.0), ("mu", 0.2), ("R", 0.7), ("D0", 1.1), ("gap0", 0.9), ("m0", 4.0)];
        for kind in BoundKind::ALL {
            let s = spec(kind, &all);
            let mut prev = f64::INFINITY;
            let horizon = if kind.per_epoch() { 60 } else { 2000 };
            for n in 0..horizon {
                let v = s.value(n).unwrap();
                assert!(v > 0.0 && v <= prev, "{kind} at {n}");
                prev = v;
            }
        }
    }

    #[test]
    fn factorial_bound_below_root_relaxation() {
        let f = spec(BoundKind::SgdmNonsmooth, &[("G", 1.0), ("R", 1.0)]);
        let r = spec(BoundKind::SgdmSqrt, &[("G", 1.0), ("R", 1.0)]);
        for n in 0..=10_000 {
            assert!(f.value(n).unwrap() < r.value(n).unwrap());
        }
    }
}
