//! Generalized rising factorial powers.
//!
//! `k^(r̄) = Γ(k+r)/Γ(k)` for real `k > 0` with `k + r > 0`, extended by the
//! convention `0^(r̄) = 0` for `r ≠ 0` and `0^(0̄) = 1`. For positive integers
//! this is the product `k (k+1) ⋯ (k+r-1)`.
//!
//! Every direct evaluation goes through the log domain. The log ratio
//! `lnΓ(k+r) − lnΓ(k)` is computed without forming either log-gamma value, so
//! it stays accurate for large bases where the two terms nearly cancel.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FacPowError {
    #[error("factorial power undefined for base {k} and exponent {r} (need k > 0 and k + r > 0, or k = 0)")]
    Domain { k: f64, r: f64 },
    #[error("base 0 has no log-domain representation (exponent {r})")]
    ZeroBase { r: f64 },
    #[error("summation range {a}..={b} is invalid (need 1 <= a <= b)")]
    SumRange { a: u64, b: u64 },
    #[error("summation closed form is undefined for exponent -1")]
    SumExponent,
    #[error("schedule scale must be positive and finite, got {0}")]
    Scale(f64),
}

/// Bases at or above this threshold use the Stirling difference directly;
/// smaller bases are shifted up with exact log-quotient corrections.
const ASYMPTOTIC_MIN: f64 = 10.0;

/// `B_{2n} / (2n (2n-1))` for n = 1..=8.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// Number of steps between log-domain resynchronizations of a schedule.
pub const RESYNC_INTERVAL: u32 = 1024;

fn check_domain(k: f64, r: f64) -> Result<(), FacPowError> {
    if !k.is_finite() || !r.is_finite() || k < 0.0 || (k > 0.0 && k + r <= 0.0) {
        return Err(FacPowError::Domain { k, r });
    }
    Ok(())
}

// Σ_{n} c_n z^{1-2n}
fn stirling_tail(z: f64) -> f64 {
    let w = 1.0 / (z * z);
    let poly = STIRLING.iter().rev().fold(0.0, |acc, &c| acc * w + c);
    poly / z
}

// lnΓ(a+r) − lnΓ(a) for min(a, a+r) >= ASYMPTOTIC_MIN.
fn ln_ratio_asymptotic(a: f64, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let b = a + r;
    (a - 0.5) * (r / a).ln_1p() + r * b.ln() - r + (stirling_tail(b) - stirling_tail(a))
}

// ln(num/den) where num = den + r.
fn ln_quotient(den: f64, r: f64) -> f64 {
    let t = r / den;
    if t.abs() < 0.5 {
        t.ln_1p()
    } else {
        ((den + r) / den).ln()
    }
}

fn ln_ratio(a: f64, r: f64) -> f64 {
    let lo = a.min(a + r);
    if lo >= ASYMPTOTIC_MIN {
        return ln_ratio_asymptotic(a, r);
    }
    // Γ(z) = Γ(z+N) / Π_{i<N} (z+i), applied to both arguments.
    let shift = (ASYMPTOTIC_MIN - lo).ceil();
    let mut correction = 0.0;
    let mut i = 0.0;
    while i < shift {
        correction += ln_quotient(a + i, r);
        i += 1.0;
    }
    ln_ratio_asymptotic(a + shift, r) - correction
}

/// `k^(r̄)`, including the zero-base convention.
pub fn facpow(k: f64, r: f64) -> Result<f64, FacPowError> {
    check_domain(k, r)?;
    if k == 0.0 {
        return Ok(if r == 0.0 { 1.0 } else { 0.0 });
    }
    Ok(ln_ratio(k, r).exp())
}

/// `ln k^(r̄) = lnΓ(k+r) − lnΓ(k)`. Rejects the zero base.
pub fn facpow_log(k: f64, r: f64) -> Result<f64, FacPowError> {
    check_domain(k, r)?;
    if k == 0.0 {
        return Err(FacPowError::ZeroBase { r });
    }
    Ok(ln_ratio(k, r))
}

/// Advances `k^(r̄)` to `(k+1)^(r̄) = ((k+r)/k) · k^(r̄)`.
pub fn recurse_k(value_at_k: f64, k: f64, r: f64) -> Result<f64, FacPowError> {
    if !(k >= 1.0) || !(k + r > 0.0) || !r.is_finite() {
        return Err(FacPowError::Domain { k, r });
    }
    Ok(value_at_k * ((k + r) / k))
}

/// `Σ_{i=a}^{b} i^(r̄)` via the telescoped difference property:
/// `(b^(r+1) − (a−1)^(r+1)) / (r+1)`, with `0^(r+1) = 0` when `a = 1`.
pub fn sum_facpow(a: u64, b: u64, r: f64) -> Result<f64, FacPowError> {
    if a < 1 || b < a {
        return Err(FacPowError::SumRange { a, b });
    }
    if r == -1.0 {
        return Err(FacPowError::SumExponent);
    }
    check_domain(a as f64, r)?;
    let upper = facpow(b as f64, r + 1.0)?;
    let lower = facpow((a - 1) as f64, r + 1.0)?;
    Ok((upper - lower) / (r + 1.0))
}

/// A stream `scale · (k + offset)^(r̄)` for `k = 0, 1, 2, …`.
///
/// Successive values come from [`recurse_k`]; every [`RESYNC_INTERVAL`] steps
/// the stream is re-anchored to a direct log-domain evaluation so that
/// multiplicative rounding drift cannot accumulate.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorialSchedule {
    r: f64,
    scale: f64,
    offset: i64,
    index: u64,
    // unscaled (index + offset)^(r̄)
    current: f64,
    since_resync: u32,
}

impl FactorialSchedule {
    pub fn new(r: f64, scale: f64, offset: i64) -> Result<Self, FacPowError> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(FacPowError::Scale(scale));
        }
        let current = facpow(offset as f64, r)?;
        Ok(Self {
            r,
            scale,
            offset,
            index: 0,
            current,
            since_resync: 0,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Index of the value [`Self::value`] returns.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn value(&self) -> f64 {
        self.scale * self.current
    }

    /// Direct evaluation at an arbitrary index, bypassing the stream state.
    pub fn value_at(&self, index: u64) -> Result<f64, FacPowError> {
        Ok(self.scale * facpow(self.base(index), self.r)?)
    }

    fn base(&self, index: u64) -> f64 {
        (index as i64 + self.offset) as f64
    }

    pub fn advance(&mut self) {
        let base = self.base(self.index);
        self.index += 1;
        self.since_resync += 1;
        if base == 0.0 || self.since_resync >= RESYNC_INTERVAL {
            // Domain was validated at construction and bases only grow.
            self.current = facpow(self.base(self.index), self.r).expect("validated schedule domain");
            self.since_resync = 0;
        } else {
            self.current *= (base + self.r) / base;
        }
    }
}

impl Iterator for FactorialSchedule {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let v = self.value();
        self.advance();
        Some(v)
    }
}

/// Builds the stream `scale · (k + offset)^(r̄)`.
pub fn schedule(r: f64, scale: f64, offset: i64) -> Result<FactorialSchedule, FacPowError> {
    FactorialSchedule::new(r, scale, offset)
}
