//! Infinite sums with a guaranteed error bound.

use crate::error::{Error, Result};

/// Default relative tolerance for certified sums.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Hard cap on the number of explicitly summed terms.
pub const MAX_TERMS: usize = 50_000_000;

// slack for accumulated rounding in f64 sums
const ROUNDING: f64 = 4.0 * f64::EPSILON;

/// A value together with a bound on its absolute error.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Certified {
    pub value: f64,
    pub error: f64,
}

impl Certified {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }

    /// Midpoint of `[lo, hi]`.
    pub fn from_bracket(lo: f64, hi: f64) -> Self {
        Self {
            value: 0.5 * (lo + hi),
            error: 0.5 * (hi - lo).abs(),
        }
    }

    pub fn lower(&self) -> f64 {
        self.value - self.error
    }

    pub fn upper(&self) -> f64 {
        self.value + self.error
    }

    pub fn rel_error(&self) -> f64 {
        if self.value == 0.0 {
            self.error
        } else {
            self.error / self.value.abs()
        }
    }

    /// Image under a monotone map, error taken from the bracket endpoints.
    pub fn map_monotone(self, f: impl Fn(f64) -> f64) -> Self {
        let v = f(self.value);
        let a = f(self.lower().max(0.0));
        let b = f(self.upper());
        Self {
            value: v,
            error: (a - v).abs().max((b - v).abs()),
        }
    }
}

impl std::ops::Add for Certified {
    type Output = Self;

    fn add(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            error: self.error + other.error,
        }
    }
}

/// `sum_{i >= start} term(i)` for nonnegative terms whose successive ratio
/// `term(i+1)/term(i)` is at most `ratio_bound(j)` for every `i >= j`.
///
/// Terms are added until the geometric remainder `term(i+1) / (1 - r)`
/// drops below `rel_tol` times the partial sum.
pub fn sum_with_ratio_bound(
    start: u64,
    term: impl Fn(u64) -> f64,
    ratio_bound: impl Fn(u64) -> f64,
    rel_tol: f64,
) -> Result<Certified> {
    let mut sum = 0.0;
    for (n, i) in (start..).take(MAX_TERMS).enumerate() {
        let t = term(i);
        if !t.is_finite() {
            return Err(Error::SeriesDiverges(format!("term {i} is not finite")));
        }
        sum += t;
        let r = ratio_bound(i);
        if r < 1.0 {
            let next = term(i + 1);
            let rem = next / (1.0 - r);
            if rem <= rel_tol * sum {
                return Ok(Certified {
                    value: sum + 0.5 * rem,
                    error: 0.5 * rem + ROUNDING * (n as f64 + 1.0) * sum,
                });
            }
        }
    }
    Err(Error::NotCertified { terms: MAX_TERMS })
}

/// `sum_{i >= start} i^{-a}` for `a > 1`.
///
/// Explicit terms up to a cutoff, then Euler-Maclaurin through the first
/// derivative term; for `x^{-a}` the truncation error is bounded by the
/// next correction `|f'''(N)|/720`.
pub fn power_tail(a: f64, start: u64) -> Result<Certified> {
    if !(a > 1.0) || !a.is_finite() {
        return Err(Error::SeriesDiverges(format!("sum of i^-{a} diverges")));
    }
    if start == 0 {
        return Err(Error::InvalidArgument("power_tail: start must be >= 1".into()));
    }
    let cutoff = start.max(1000);
    let mut sum = 0.0;
    for i in start..cutoff {
        sum += (i as f64).powf(-a);
    }
    let n = cutoff as f64;
    let f = n.powf(-a);
    let integral = n.powf(1.0 - a) / (a - 1.0);
    let em = integral + 0.5 * f + a * f / (12.0 * n);
    let trunc = a * (a + 1.0) * (a + 2.0) * f / (n * n * n) / 720.0;
    let total = sum + em;
    Ok(Certified {
        value: total,
        error: 2.0 * trunc + ROUNDING * (cutoff - start + 8) as f64 * total,
    })
}

/// Bounds `-ln(1 - x)` from a certified enclosure of `sum x_i` and of
/// `sum x_i^2` with `x_i <= x_max < 1`:
/// `x <= -ln(1-x) <= x + x^2 / (2 (1 - x_max))`.
pub fn neg_log1m_sum(first: Certified, second: Certified, x_max: f64) -> Certified {
    let lo = first.lower();
    let hi = first.upper() + second.upper() / (2.0 * (1.0 - x_max));
    Certified::from_bracket(lo, hi)
}
