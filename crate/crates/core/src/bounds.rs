//! Tail norms `delta_{n,q}`, `l_q` products and the quantitative bounds on
//! cardinalities and decay rates, with the exact quantities they bound.

use std::f64::consts::{E, LN_2, PI};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::construct::{delta_sequence_with, BuildOptions};
use crate::error::{Error, Result};
use crate::partitions::DyadicCounts;
use crate::series::{power_tail, sum_with_ratio_bound, Certified, DEFAULT_REL_TOL};
use crate::weights::{biguint_log2, block_index, SequenceKind, TailRule, WeightSequence};

// poly tails are summed explicitly up to this coordinate
const EXPLICIT_POLY: u64 = 999;
// deepest level used by the exact dyadic tail sum
const MAX_DYADIC_LEVEL: u32 = 2000;
const ROUNDING: f64 = 4.0 * f64::EPSILON;

/// `C = (1 - 2^{-1/4})^{-1}`.
pub fn big_c() -> f64 {
    1.0 / (1.0 - 2f64.powf(-0.25))
}

/// `c = pi sqrt(2/3) / ln 2`.
pub fn small_c() -> f64 {
    PI * (2.0f64 / 3.0).sqrt() / LN_2
}

/// `C~ = C (1 - c/4)^{-3/4}`.
pub fn c_tilde() -> f64 {
    big_c() * (1.0 - small_c() / 4.0).powf(-0.75)
}

/// Conjugate exponent: `1/p + 1/q = 1`, `p` in `[1, inf]`.
pub fn conjugate(p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!("p must lie in [1, inf], got {p}")));
    }
    Ok(if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    })
}

#[derive(Clone, Copy, Debug)]
pub struct EvalOptions {
    pub build: BuildOptions,
    pub rel_tol: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            build: BuildOptions::default(),
            rel_tol: DEFAULT_REL_TOL,
        }
    }
}

/// True when `(rho_j^{-1})` lies in `l_q`.
pub fn in_lq(seq: &WeightSequence, q: f64) -> bool {
    if q.is_infinite() {
        return true;
    }
    match seq.kind() {
        SequenceKind::PolyGrowth { s } | SequenceKind::DyadicBlocks { s } => s * q > 1.0,
        SequenceKind::Custom { tail, .. } => match *tail {
            TailRule::Poly { s } | TailRule::Dyadic { s } => s * q > 1.0,
            TailRule::Finite => true,
        },
    }
}

/// Coordinates `1..=explicit` are summed term by term, the rest follow `tail`.
fn split(seq: &WeightSequence) -> (u64, TailRule) {
    match seq.kind() {
        SequenceKind::PolyGrowth { s } => (EXPLICIT_POLY, TailRule::Poly { s: *s }),
        SequenceKind::DyadicBlocks { s } => (0, TailRule::Dyadic { s: *s }),
        SequenceKind::Custom { prefix, tail } => {
            let len = prefix.len() as u64;
            match tail {
                TailRule::Poly { .. } => (len.max(EXPLICIT_POLY), *tail),
                _ => (len, *tail),
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Summand {
    /// `x`
    Plain,
    /// `-ln(1 - x)`
    NegLog1m,
}

fn apply(summand: Summand, x: f64) -> f64 {
    match summand {
        Summand::Plain => x,
        Summand::NegLog1m => -(-x).ln_1p(),
    }
}

/// `sum_j g(rho_j^{-q})`.
fn coordinate_sum(seq: &WeightSequence, q: f64, summand: Summand) -> Result<Certified> {
    let (explicit, tail) = split(seq);
    let mut head = 0.0;
    for j in 1..=explicit {
        head += apply(summand, (-q * seq.log2_rho(j)?).exp2());
    }
    let head = Certified {
        value: head,
        error: ROUNDING * explicit as f64 * head,
    };
    let rest = match tail {
        TailRule::Finite => Certified::exact(0.0),
        TailRule::Poly { s } => poly_tail_sum(s * q, explicit + 1, summand)?,
        TailRule::Dyadic { s } => dyadic_tail_sum(s * q, explicit + 1, summand)?,
    };
    Ok(head + rest)
}

/// `sum_{j >= j0} g((j+1)^{-b})`.
fn poly_tail_sum(b: f64, j0: u64, summand: Summand) -> Result<Certified> {
    let start = j0 + 1;
    if summand == Summand::Plain {
        return power_tail(b, start);
    }
    // -ln(1-x) = sum_k x^k / k, remainder after K terms <= x^{K+1}/((K+1)(1-x))
    let x_max = (start as f64).powf(-b);
    let mut acc = Certified::exact(0.0);
    for k in 1..64u32 {
        let kf = f64::from(k);
        let t = power_tail(kf * b, start)?;
        acc = acc
            + Certified {
                value: t.value / kf,
                error: t.error / kf,
            };
        let next = power_tail((kf + 1.0) * b, start)?;
        let rem = next.upper() / ((kf + 1.0) * (1.0 - x_max));
        if rem <= 1e-3 * ROUNDING * acc.value {
            return Ok(Certified {
                value: acc.value + 0.5 * rem,
                error: acc.error + 0.5 * rem,
            });
        }
    }
    Err(Error::NotCertified { terms: 64 })
}

/// `sum_{j >= j0} g(2^{-a k(j)})` with `k(j)` the block index.
fn dyadic_tail_sum(a: f64, j0: u64, summand: Summand) -> Result<Certified> {
    let y = (-a).exp2();
    if 2.0 * y >= 1.0 {
        return Err(Error::SeriesDiverges(format!("dyadic tail with exponent {a} <= 1")));
    }
    let k0 = block_index(j0);
    let block_end = 1u64 << k0;
    let first = (block_end - j0 + 1) as f64 * apply(summand, y.powi(k0 as i32));
    // closed form for blocks k > K: sum 2^{k-1} y^k = (2y)^{K+1} / (2 (1-2y))
    let geometric = |kk: u32| 0.5 * (2.0 * y).powi(kk as i32 + 1) / (1.0 - 2.0 * y);
    if summand == Summand::Plain {
        let v = first + geometric(k0);
        return Ok(Certified {
            value: v,
            error: ROUNDING * 8.0 * v,
        });
    }
    // explicit blocks until y^{K+1} is negligible, then x <= -ln(1-x) <= x/(1-x)
    let extra = ((60.0 / a).ceil() as u32).max(8);
    let kmax = k0 + extra;
    let mut sum = first;
    for k in (k0 + 1)..=kmax {
        sum += 2f64.powi(k as i32 - 1) * apply(summand, y.powi(k as i32));
    }
    let t1 = geometric(kmax);
    let lo = sum + t1;
    let hi = sum + t1 / (1.0 - y.powi(kmax as i32 + 1));
    let mut c = Certified::from_bracket(lo, hi);
    c.error += ROUNDING * f64::from(extra + 2) * hi;
    Ok(c)
}

/// `||(rho^{-nu})||_{l_q}` via the product `prod_j (1 - rho_j^{-q})^{-1}`,
/// with the exponential sandwich around the product.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LqNorm {
    pub q: f64,
    /// `||(rho^{-nu})||_{l_q}`.
    pub value: Certified,
    /// `prod_j (1 - rho_j^{-q})^{-1}`, the `q`-th power of `value`.
    pub product: Certified,
    /// `||(rho_j^{-1})||_{l_q}^q`.
    pub sequence_norm_q: Certified,
    /// `exp(||(rho_j^{-1})||_q^q)`.
    pub lower_sandwich: f64,
    /// `exp((1 - rho_1^{-q})^{-1} ||(rho_j^{-1})||_q^q)`.
    pub upper_sandwich: f64,
}

impl LqNorm {
    /// `lower <= product <= upper`, up to the certified error of the product.
    pub fn sandwich_holds(&self) -> bool {
        self.lower_sandwich <= self.product.upper() && self.product.lower() <= self.upper_sandwich
    }
}

pub fn lq_norm_product(seq: &WeightSequence, q: f64) -> Result<LqNorm> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::InvalidArgument(format!("q must lie in (0, inf), got {q}")));
    }
    if !in_lq(seq, q) {
        return Err(Error::NotInLq(format!("(rho_j^-1) is not in l_{q} for {seq}")));
    }
    let log_product = coordinate_sum(seq, q, Summand::NegLog1m)?;
    let s1 = coordinate_sum(seq, q, Summand::Plain)?;
    let product = log_product.map_monotone(f64::exp);
    let value = product.map_monotone(|v| v.powf(1.0 / q));
    let rho1_inv_q = (-q * seq.log2_rho(1)?).exp2();
    Ok(LqNorm {
        q,
        value,
        product,
        sequence_norm_q: s1,
        lower_sandwich: s1.value.exp(),
        upper_sandwich: (s1.value / (1.0 - rho1_inv_q)).exp(),
    })
}

/// `delta_{n,q}`: the `l_q` norm of `(delta_j)_{j > n}`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailNorm {
    pub n: usize,
    pub q: f64,
    pub value: Certified,
}

pub fn tail_norm(seq: &WeightSequence, n: usize, q: f64) -> Result<TailNorm> {
    tail_norm_with(seq, n, q, &EvalOptions::default())
}

pub fn tail_norm_with(seq: &WeightSequence, n: usize, q: f64, opts: &EvalOptions) -> Result<TailNorm> {
    if !(q > 0.0) {
        return Err(Error::InvalidArgument(format!("q must be positive, got {q}")));
    }
    let value = if q.is_infinite() {
        let d = delta_sequence_with(seq, n + 1, &opts.build)?;
        Certified::exact(d.values()[n])
    } else if !in_lq(seq, q) {
        return Err(Error::TailDiverges(format!("sum of delta_j^{q} diverges for {seq}")));
    } else if let SequenceKind::DyadicBlocks { s } = seq.kind() {
        dyadic_tail_power(*s * q, n, opts.rel_tol)?.map_monotone(|v| v.powf(1.0 / q))
    } else {
        let total = lq_norm_product(seq, q)?.product;
        let head = if n == 0 {
            0.0
        } else {
            let d = delta_sequence_with(seq, n, &opts.build)?;
            d.weights().iter().map(|w| (-q * w.log2_value).exp2()).sum()
        };
        let rest = Certified {
            value: (total.value - head).max(0.0),
            error: total.error + ROUNDING * n as f64 * total.value,
        };
        rest.map_monotone(|v| v.powf(1.0 / q))
    };
    Ok(TailNorm { n, q, value })
}

/// `sum_{j > n} delta_j(rho*(s))^q` with `a = s q`, from exact level counts.
///
/// Levels beyond the summed ones are bounded through
/// `#S_m <= m^{-3/4} 2^{m + c sqrt m}`.
fn dyadic_tail_power(a: f64, n: usize, rel_tol: f64) -> Result<Certified> {
    if a <= 1.0 {
        return Err(Error::TailDiverges(format!("dyadic tail with s*q = {a} <= 1")));
    }
    let c = small_c();
    let mut counts = DyadicCounts::new();
    let m0 = counts.delta_exponent(&BigUint::from(n + 1));
    let left = counts.cumulative(m0) - BigUint::from(n);
    let mut sum = (biguint_log2(&left) - f64::from(m0) * a).exp2();
    let hr = |m: f64| (-0.75 * m.log2() + m * (1.0 - a) + c * m.sqrt()).exp2();
    let mut m = m0;
    loop {
        m += 1;
        if m > MAX_DYADIC_LEVEL {
            return Err(Error::NotCertified {
                terms: MAX_DYADIC_LEVEL as usize,
            });
        }
        sum += (biguint_log2(counts.level(m)) - f64::from(m) * a).exp2();
        let next = f64::from(m + 1);
        let ratio = (1.0 - a + c / (2.0 * next.sqrt())).exp2();
        if ratio < 1.0 {
            let rem = hr(next) / (1.0 - ratio);
            if rem <= rel_tol * sum {
                return Ok(Certified {
                    value: sum + 0.5 * rem,
                    error: 0.5 * rem + ROUNDING * f64::from(m - m0 + 1) * sum,
                });
            }
        }
    }
}

/// `delta_{n,q}` for the class `U_{rho,p}`, `q` conjugate to `p`.
pub fn surrogate_class_error(seq: &WeightSequence, n: usize, p: f64) -> Result<TailNorm> {
    tail_norm(seq, n, conjugate(p)?)
}

pub fn surrogate_class_error_with(seq: &WeightSequence, n: usize, p: f64, opts: &EvalOptions) -> Result<TailNorm> {
    tail_norm_with(seq, n, conjugate(p)?, opts)
}

/// Two interpolation bounds on `delta_{n,q}` through a smaller exponent `r`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Interpolation {
    /// `delta_{n+1}^{1 - r/q} delta_{n,r}^{r/q}`.
    pub geometric: f64,
    /// `(n+1)^{-1/r + 1/q} ||(rho^{-nu})||_{l_r}`.
    pub power: f64,
    /// `delta_{n,q}` itself.
    pub target: Certified,
}

pub fn interpolation_bound(seq: &WeightSequence, n: usize, p: f64, r: f64) -> Result<Interpolation> {
    let q = conjugate(p)?;
    if !(r > 0.0) || r >= q {
        return Err(Error::InvalidArgument(format!("need 0 < r < q = {q}, got r = {r}")));
    }
    let opts = EvalOptions::default();
    let delta_next = tail_norm_with(seq, n, f64::INFINITY, &opts)?.value.value;
    let norm_r = lq_norm_product(seq, r).map_err(|e| match e {
        Error::NotInLq(msg) => Error::TailDiverges(msg),
        other => other,
    })?;
    let (geometric, power) = if q.is_infinite() {
        (delta_next, ((n + 1) as f64).powf(-1.0 / r) * norm_r.value.value)
    } else {
        let tail_r = tail_norm_with(seq, n, r, &opts)?.value.value;
        let theta = r / q;
        (
            delta_next.powf(1.0 - theta) * tail_r.powf(theta),
            ((n + 1) as f64).powf(-1.0 / r + 1.0 / q) * norm_r.value.value,
        )
    };
    let target = tail_norm_with(seq, n, q, &opts)?.value;
    Ok(Interpolation {
        geometric,
        power,
        target,
    })
}

/// The corner simplex `{x >= 0 : sum x_j / a_j <= 1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimplexSpec {
    side_lengths: Vec<f64>,
}

impl SimplexSpec {
    pub fn new(side_lengths: Vec<f64>) -> Result<Self> {
        if side_lengths.is_empty() {
            return Err(Error::InvalidArgument("simplex needs D >= 1".into()));
        }
        if let Some(a) = side_lengths.iter().find(|a| !(**a >= 1.0) || !a.is_finite()) {
            return Err(Error::InvalidArgument(format!("side length {a} is not >= 1")));
        }
        Ok(Self { side_lengths })
    }

    /// `a_j = M / ln rho_j` for `j <= D`, `M = ln(1/eps)`; `None` when `D = 0`.
    pub fn for_threshold(seq: &WeightSequence, eps: f64) -> Result<Option<Self>> {
        let d = seq.truncation_dimension(eps)?;
        if d == 0 {
            return Ok(None);
        }
        let m = (1.0 / eps).ln();
        let sides = (1..=d)
            .map(|j| Ok(m / (seq.log2_rho(j)? * LN_2)))
            .collect::<Result<Vec<f64>>>()?;
        // rounding can push a_D a hair below 1 at the boundary
        Self::new(sides.into_iter().map(|a| a.max(1.0)).collect()).map(Some)
    }

    pub fn side_lengths(&self) -> &[f64] {
        &self.side_lengths
    }

    pub fn dimension(&self) -> usize {
        self.side_lengths.len()
    }

    /// `sum_j 1/a_j`.
    pub fn inverse_sum(&self) -> f64 {
        self.side_lengths.iter().map(|a| 1.0 / a).sum()
    }

    /// Lattice points of `N_0^D` inside the simplex, by enumeration.
    pub fn lattice_count(&self) -> u64 {
        fn rec(sides: &[f64], budget: f64) -> u64 {
            match sides.split_first() {
                None => 1,
                Some((&a, rest)) => {
                    let mut total = 0;
                    let mut k = 0u64;
                    loop {
                        let used = k as f64 / a;
                        if used > budget + 1e-12 {
                            return total;
                        }
                        total += rec(rest, budget - used);
                        k += 1;
                    }
                }
            }
        }
        rec(&self.side_lengths, 1.0)
    }
}

/// `prod a_j / D!`.
pub fn simplex_volume(spec: &SimplexSpec) -> f64 {
    spec.side_lengths
        .iter()
        .enumerate()
        .fold(1.0, |acc, (i, a)| acc * a / (i + 1) as f64)
}

/// `(vol, (1 + a)^D vol)` with `a = sum 1/a_j`.
pub fn simplex_lattice_bounds(spec: &SimplexSpec) -> (f64, f64) {
    let vol = simplex_volume(spec);
    let inflate = (1.0 + spec.inverse_sum()).powi(spec.dimension() as i32);
    (vol, inflate * vol)
}

fn ln_factorial(d: u64) -> f64 {
    (2..=d).map(|k| (k as f64).ln()).sum()
}

/// `(M + L)^D / D! / prod_{j<=D} ln rho_j` with `M = ln(1/eps)`,
/// `L = sum_{j<=D} ln rho_j`; 1 when `D = 0`.
pub fn count_upper_bound(seq: &WeightSequence, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1], got {eps}")));
    }
    let d = seq.truncation_dimension(eps)?;
    if d == 0 {
        return Ok(1.0);
    }
    let m = (1.0 / eps).ln();
    let mut l = 0.0;
    let mut log_prod = 0.0;
    for j in 1..=d {
        let ln_rho = seq.log2_rho(j)? * LN_2;
        l += ln_rho;
        log_prod += ln_rho.ln();
    }
    Ok((d as f64 * (m + l).ln() - ln_factorial(d) - log_prod).exp())
}

/// `B(d)` for `rho = (j+1)_{j<=d}` and `eps = 1/(d+1)`, with its lower
/// estimate `e^{-1} d^{-1/2} (e/2)^d`.
pub fn bd_example(d: u32) -> Result<(f64, f64)> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be >= 1".into()));
    }
    let df = f64::from(d);
    let m_plus_l = (df + 1.0).ln() + ln_factorial(u64::from(d) + 1);
    let log_prod: f64 = (1..=d).map(|j| f64::from(j + 1).ln().ln()).sum();
    let b = (df * m_plus_l.ln() - ln_factorial(u64::from(d)) - log_prod).exp();
    let lower = (-1.0 - 0.5 * df.ln() + df * (E / 2.0).ln()).exp();
    Ok((b, lower))
}

/// Upper estimates for `#Lambda(2^{-m}, rho*(1))`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CountBound {
    pub m: u32,
    /// `2^{m + 4 sqrt m}`.
    pub first: f64,
    /// `C m^{-3/4} 2^{m + c sqrt m}`.
    pub second: f64,
    /// `first` for `2 <= m <= 5`, `second` for `m >= 6`; exact for `m < 2`.
    pub combined: f64,
}

pub fn asymptotic_count_bound(m: u32) -> CountBound {
    let mf = f64::from(m);
    let first = (mf + 4.0 * mf.sqrt()).exp2();
    let second = big_c() * mf.powf(-0.75) * (mf + small_c() * mf.sqrt()).exp2();
    let combined = match m {
        0 => 1.0,
        1 => 3.0,
        2..=5 => first,
        _ => second,
    };
    CountBound {
        m,
        first,
        second,
        combined,
    }
}

fn log2_u64(n: u64) -> f64 {
    (n as f64).log2()
}

/// `2^{-6s} n^{-s} n^{4 s sqrt(4 + log2 n) / log2 n}`.
pub fn cor53_bound(s: f64, n: u64) -> Result<f64> {
    if !(s > 0.0) || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need s > 0 and n >= 2, got s={s}, n={n}"
        )));
    }
    let k = log2_u64(n);
    Ok((-6.0 * s - s * k + 4.0 * s * (4.0 + k).sqrt()).exp2())
}

/// `C_0^q = sum_{j>=0} 2^{-j(sq-1)} 2^{4 s q sqrt j}`, certified.
pub fn cor54_series(s: f64, q: f64, rel_tol: f64) -> Result<Certified> {
    let a = s * q;
    if !(a > 1.0) {
        return Err(Error::SeriesDiverges(format!("need s*q > 1, got {a}")));
    }
    let term = |j: u64| {
        let jf = j as f64;
        (-jf * (a - 1.0) + 4.0 * a * jf.sqrt()).exp2()
    };
    let ratio = |j: u64| {
        let jf = j as f64;
        (-(a - 1.0) + 4.0 * a * ((jf + 1.0).sqrt() - jf.sqrt())).exp2()
    };
    sum_with_ratio_bound(0, term, ratio, rel_tol)
}

/// `C(q,s) = 2^{s - 1/q} C_1`, `C_1 = 2^{-5s - 1/q} C_0`, from the upper end
/// of the certified series.
pub fn cor54_constant(s: f64, q: f64) -> Result<f64> {
    let c0_q = cor54_series(s, q, DEFAULT_REL_TOL)?;
    let c0 = c0_q.upper().powf(1.0 / q);
    let c1 = (-5.0 * s - 1.0 / q).exp2() * c0;
    Ok((s - 1.0 / q).exp2() * c1)
}

/// `C(q,s) n^{-s+1/q} n^{4 s sqrt(4 + log2 n) / log2 n}` for `p` in `(1, inf]`.
pub fn cor54_bound(s: f64, p: f64, n: u64) -> Result<f64> {
    let q = conjugate(p)?;
    if q.is_infinite() {
        return Err(Error::InvalidArgument("p must exceed 1".into()));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n must be >= 2, got {n}")));
    }
    let c = cor54_constant(s, q)?;
    let k = log2_u64(n);
    Ok(c * ((-s + 1.0 / q) * k + 4.0 * s * (4.0 + k).sqrt()).exp2())
}

/// Left side of the defining inequality of `m(n)`:
/// `log2 C - (3/4) log2 m + m + c sqrt m`.
pub fn cor55_lhs(m: u32) -> f64 {
    let mf = f64::from(m);
    big_c().log2() - 0.75 * mf.log2() + mf + small_c() * mf.sqrt()
}

/// The largest `m >= 1` with `cor55_lhs(m) <= log2 n`, for `n >= 2^16`.
pub fn cor55_m_of_n(n: u64) -> Result<u32> {
    if n < 1 << 16 {
        return Err(Error::BelowValidityThreshold { n });
    }
    let target = log2_u64(n);
    let mut m = 1u32;
    while cor55_lhs(m + 1) <= target {
        m += 1;
    }
    Ok(m)
}

/// `(ceil(C~ n / (log2 n)^{3/4}), 2^s n^{-s} n^{c s / sqrt(log2 n)})`.
pub fn cor56_bound(s: f64, n: u64) -> Result<(u64, f64)> {
    if n < 1 << 16 {
        return Err(Error::BelowValidityThreshold { n });
    }
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("s must be positive, got {s}")));
    }
    let k = log2_u64(n);
    let index = (c_tilde() * n as f64 / k.powf(0.75)).ceil() as u64;
    let bound = (s - s * k + small_c() * s * k.sqrt()).exp2();
    Ok((index, bound))
}

/// `C_sigma = (4e + 4 sigma e - 2) e / (e - 1)`.
pub fn tran_constant(sigma: f64) -> f64 {
    (4.0 * E + 4.0 * sigma * E - 2.0) * E / (E - 1.0)
}

/// `C_sigma n exp(-(prod ln rho_i * n d! / (1 + sigma))^{1/d})` for the
/// finite sequence `rho_prefix`.
pub fn tran_bound(rho_prefix: &[f64], sigma: f64, n: u64) -> Result<f64> {
    if rho_prefix.is_empty() {
        return Err(Error::InvalidArgument("need at least one coordinate".into()));
    }
    if let Some(r) = rho_prefix.iter().find(|r| !(**r > 1.0)) {
        return Err(Error::NotAdmissible(format!("rho_i = {r} must exceed 1")));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let d = rho_prefix.len() as u64;
    let log_inner: f64 =
        rho_prefix.iter().map(|r| r.ln().ln()).sum::<f64>() + (n as f64).ln() + ln_factorial(d) - (1.0 + sigma).ln();
    let expo = (log_inner / d as f64).exp();
    Ok(tran_constant(sigma) * n as f64 * (-expo).exp())
}

/// `delta_n(rho*(s)) = 2^{-m s}`, `m` the level holding the `n`-th index.
pub fn dyadic_delta(counts: &mut DyadicCounts, s: f64, n: u64) -> f64 {
    let m = counts.delta_exponent(&BigUint::from(n));
    (-s * f64::from(m)).exp2()
}

/// A bound evaluated at one parameter point, with the exact quantity when
/// one is available.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub params: Vec<(String, f64)>,
    pub bound: f64,
    pub exact: Option<f64>,
    pub dominated: Option<bool>,
    pub margin: Option<f64>,
}

impl BoundReport {
    pub fn new(name: &str, params: Vec<(&str, f64)>, bound: f64, exact: Option<f64>) -> Self {
        Self {
            name: name.to_string(),
            params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            bound,
            exact,
            dominated: exact.map(|e| bound >= e),
            margin: exact.map(|e| bound / e),
        }
    }

    /// A comparison value that the bound is not claimed to dominate.
    pub fn unverified(name: &str, params: Vec<(&str, f64)>, bound: f64, reference: Option<f64>) -> Self {
        let mut r = Self::new(name, params, bound, reference);
        r.dominated = None;
        r
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// Exact cardinality as `f64` (saturating).
pub fn big_to_f64(v: &BigUint) -> f64 {
    v.to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{build_lambda, delta_sequence};
    use crate::partitions::exact_lambda_count;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn constants() {
        assert!(close(big_c(), 6.285_213_507_883_244, 1e-14));
        assert!(small_c() < 4.0);
        assert!(close(small_c(), 3.700_656_559_335_007, 1e-14));
        assert!(close(c_tilde(), big_c() * (1.0 - small_c() / 4.0).powf(-0.75), 1e-15));
        assert_eq!(conjugate(1.0).unwrap(), f64::INFINITY);
        assert_eq!(conjugate(f64::INFINITY).unwrap(), 1.0);
        assert_eq!(conjugate(2.0).unwrap(), 2.0);
        assert!(conjugate(0.5).is_err());
    }

    #[test]
    fn lq_dyadic_closed_form() {
        let dy = WeightSequence::dyadic(1.0).unwrap();
        let n = lq_norm_product(&dy, 2.0).unwrap();
        assert!(close(n.sequence_norm_q.value, 0.75, 1e-14));
        assert!(close(n.lower_sandwich, 0.75f64.exp(), 1e-14));
        assert!(close(n.upper_sandwich, 1f64.exp(), 1e-14));
        assert!(n.sandwich_holds());
        // product over blocks computed directly
        let direct: f64 = (1..200)
            .map(|k: i32| {
                let count = if k == 1 { 2.0 } else { 2f64.powi(k - 1) };
                -count * (-(4f64.powi(-k))).ln_1p()
            })
            .sum();
        assert!(close(n.product.value, direct.exp(), 1e-13));
        assert!(n.product.rel_error() < 1e-10);
    }

    #[test]
    fn lq_poly_basel() {
        let poly = WeightSequence::poly(2.0).unwrap();
        let n = lq_norm_product(&poly, 1.0).unwrap();
        let expected = PI * PI / 6.0 - 1.0;
        assert!((n.sequence_norm_q.value - expected).abs() <= n.sequence_norm_q.error + 1e-14);
        assert!(n.sandwich_holds());
        // prod_{i>=2} (1 - 1/i^2)^{-1} = 2
        assert!(
            (n.product.value - 2.0).abs() <= n.product.error + 1e-13,
            "{:?}",
            n.product
        );
        assert!(n.product.rel_error() < 1e-10);
    }

    #[test]
    fn lq_rejects_divergent() {
        let poly = WeightSequence::poly(1.0).unwrap();
        assert!(matches!(lq_norm_product(&poly, 1.0), Err(Error::NotInLq(_))));
        let dy = WeightSequence::dyadic(0.5).unwrap();
        assert!(matches!(lq_norm_product(&dy, 2.0), Err(Error::NotInLq(_))));
        assert!(lq_norm_product(&dy, 2.5).is_ok());
    }

    #[test]
    fn lq_value_decreases_to_one() {
        let poly = WeightSequence::poly(1.0).unwrap();
        let mut prev = f64::INFINITY;
        for q in [1.5, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
            let v = lq_norm_product(&poly, q).unwrap().value.value;
            assert!(v <= prev && v >= 1.0);
            prev = v;
        }
        assert!(prev < 1.0 + 1e-9);
    }

    #[test]
    fn lq_finite_sequence_is_a_plain_product() {
        let seq = WeightSequence::custom(vec![2.0, 3.0], TailRule::Finite).unwrap();
        let n = lq_norm_product(&seq, 1.0).unwrap();
        assert!(close(n.product.value, 2.0 * 1.5, 1e-14));
    }

    #[test]
    fn lq_custom_with_dyadic_tail_matches_dyadic() {
        // the first three dyadic entries given explicitly
        let explicit = WeightSequence::custom(vec![2.0, 2.0, 4.0], TailRule::Dyadic { s: 1.0 }).unwrap();
        let dy = WeightSequence::dyadic(1.0).unwrap();
        let a = lq_norm_product(&explicit, 2.0).unwrap();
        let b = lq_norm_product(&dy, 2.0).unwrap();
        assert!(close(a.product.value, b.product.value, 1e-13));
    }

    #[test]
    fn tail_norm_q_inf_examples() {
        let dy = WeightSequence::dyadic(1.0).unwrap();
        assert_eq!(tail_norm(&dy, 3, f64::INFINITY).unwrap().value.value, 0.25);
        let d = delta_sequence(&dy, 40).unwrap();
        for n in 0..39 {
            assert_eq!(tail_norm(&dy, n, f64::INFINITY).unwrap().value.value, d.values()[n]);
        }
    }

    #[test]
    fn tail_norm_dyadic_two_routes_agree() {
        let dy = WeightSequence::dyadic(1.0).unwrap();
        let t = tail_norm(&dy, 0, 2.0).unwrap().value;
        let p = lq_norm_product(&dy, 2.0).unwrap().value;
        assert!((t.value - p.value).abs() < 1e-8, "{t:?} {p:?}");
        assert!(t.rel_error() < 1e-10);
    }

    #[test]
    fn tail_norm_dyadic_matches_partial_sums() {
        // subtracting the first n terms by hand from the n=0 tail
        let dy = WeightSequence::dyadic(2.0).unwrap();
        let full = tail_norm(&dy, 0, 1.0).unwrap().value;
        let d = delta_sequence(&dy, 30).unwrap();
        let mut head = 0.0;
        for n in 1..30 {
            head += d.values()[n - 1];
            let t = tail_norm(&dy, n, 1.0).unwrap().value;
            assert!((t.value - (full.value - head)).abs() <= t.error + full.error, "n={n}");
        }
    }

    #[test]
    fn tail_norm_poly_matches_enumerated_prefix() {
        let poly = WeightSequence::poly(2.0).unwrap();
        let d = delta_sequence(&poly, 60).unwrap();
        let t0 = tail_norm(&poly, 0, 2.0).unwrap().value.value;
        let t10 = tail_norm(&poly, 10, 2.0).unwrap().value.value;
        let head: f64 = d.values()[..10].iter().map(|v| v * v).sum();
        assert!(close(t10 * t10, t0 * t0 - head, 1e-12));
    }

    #[test]
    fn tail_norm_errors() {
        let dy = WeightSequence::dyadic(1.0).unwrap();
        assert!(matches!(tail_norm(&dy, 3, 1.0), Err(Error::TailDiverges(_))));
        let poly = WeightSequence::poly(1.0).unwrap();
        assert!(matches!(tail_norm(&poly, 3, 1.0), Err(Error::TailDiverges(_))));
    }

    #[test]
    fn class_error_examples() {
        let dy = WeightSequence::dyadic(1.0).unwrap();
        assert_eq!(surrogate_class_error(&dy, 3, 1.0).unwrap().value.value, 0.25);
        let dy2 = WeightSequence::dyadic(2.0).unwrap();
        // the sum over nu != 0 drops delta_1 = 1
        let p = lq_norm_product(&dy2, 1.0).unwrap().product;
        let e0 = surrogate_class_error(&dy2, 0, f64::INFINITY).unwrap().value;
        assert!((e0.value - p.value).abs() <= e0.error + p.error + 1e-13);
        let e1 = surrogate_class_error(&dy2, 1, f64::INFINITY).unwrap().value;
        assert!((e1.value - (p.value - 1.0)).abs() <= e1.error + p.error + 1e-13);
    }

    #[test]
    fn interpolation_examples() {
        let dy2 = WeightSequence::dyadic(2.0).unwrap();
        let i = interpolation_bound(&dy2, 3, 1.0, 1.0).unwrap();
        assert_eq!(i.geometric, dyadic_delta(&mut DyadicCounts::new(), 2.0, 4));
        assert!(i.power >= i.target.value);

        let i = interpolation_bound(&dy2, 8, 2.0, 1.0).unwrap();
        assert!(i.geometric >= i.target.value);
        assert!(i.power >= i.target.value);
        let p = lq_norm_product(&dy2, 1.0).unwrap().product.value;
        assert!(close(i.power, p / 3.0, 1e-12));

        assert!(interpolation_bound(&dy2, 8, 2.0, 2.0).is_err());
    }

    #[test]
    fn simplex_examples() {
        let s = SimplexSpec::new(vec![2.0, 2.0]).unwrap();
        assert_eq!(simplex_volume(&s), 2.0);
        assert_eq!(simplex_lattice_bounds(&s), (2.0, 8.0));
        assert_eq!(s.lattice_count(), 6);
        let s = SimplexSpec::new(vec![1.0]).unwrap();
        assert_eq!(simplex_lattice_bounds(&s), (1.0, 2.0));
        assert_eq!(s.lattice_count(), 2);
        let s = SimplexSpec::new(vec![1.0; 4]).unwrap();
        assert!(close(simplex_volume(&s), 1.0 / 24.0, 1e-15));
        assert_eq!(simplex_volume(&SimplexSpec::new(vec![3.5]).unwrap()), 3.5);
        let s = SimplexSpec::new(vec![3.0, 1.0]).unwrap();
        let (lo, hi) = simplex_lattice_bounds(&s);
        let c = s.lattice_count() as f64;
        assert!(lo <= c && c <= hi);
        assert!(SimplexSpec::new(vec![0.5]).is_err());
        assert!(SimplexSpec::new(vec![]).is_err());
    }

    #[test]
    fn count_upper_bound_examples() {
        let poly = WeightSequence::poly(1.0).unwrap();
        let b = count_upper_bound(&poly, 1.0 / 3.0).unwrap();
        let expected = (3f64.ln() + 6f64.ln()).powi(2) / (2.0 * LN_2 * 3f64.ln());
        assert!(close(b, expected, 1e-13));
        assert!(close(b, 5.49, 1e-3));
        let dy = WeightSequence::dyadic(1.0).unwrap();
        assert!(close(count_upper_bound(&dy, 0.5).unwrap(), 4.5, 1e-13));
        assert_eq!(count_upper_bound(&poly, 0.9).unwrap(), 1.0);
        assert_eq!(count_upper_bound(&poly, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn bd_examples() {
        let (b1, _) = bd_example(1).unwrap();
        assert!(close(b1, 2.0, 1e-14));
        // B(5) against the count for rho = (2,...,6), eps = 1/6
        let (b5, _) = bd_example(5).unwrap();
        let seq = WeightSequence::custom(vec![2.0, 3.0, 4.0, 5.0, 6.0], TailRule::Finite).unwrap();
        let exact = build_lambda(&seq, 1.0 / 6.0).unwrap().len();
        // products <= 6: 1,2,3,4,5,6 and 2*2, 2*3
        assert_eq!(exact, 8);
        assert!(b5 >= exact as f64);
        let (b20, lo20) = bd_example(20).unwrap();
        assert!(b20 >= lo20);
    }

    #[test]
    fn asymptotic_count_examples() {
        let b = asymptotic_count_bound(2);
        assert!(close(b.combined, (2.0 + 4.0 * 2f64.sqrt()).exp2(), 1e-14));
        assert!(b.combined >= 8.0 && (b.combined - 201.81).abs() < 0.01);
        assert!(asymptotic_count_bound(6).combined >= 298.0);
        assert!(asymptotic_count_bound(10).combined >= 9712.0);
        assert_eq!(asymptotic_count_bound(0).combined, 1.0);
        assert_eq!(asymptotic_count_bound(1).combined, 3.0);
        for m in 2..=5 {
            let b = asymptotic_count_bound(m);
            assert!(b.first <= b.second, "m={m}");
        }
        let mut counts = DyadicCounts::new();
        for m in 6..=40 {
            let b = asymptotic_count_bound(m);
            assert!(b.second <= b.first, "m={m}");
            assert!(b.combined >= big_to_f64(counts.cumulative(m)), "m={m}");
        }
        assert_eq!(counts.cumulative(12), &exact_lambda_count(12));
    }

    #[test]
    fn level_count_estimate_holds() {
        // #S_m <= m^{-3/4} 2^{m + c sqrt m}, which the dyadic tail sum relies on
        let mut counts = DyadicCounts::new();
        for m in 1..=300u32 {
            let mf = f64::from(m);
            let log_bound = -0.75 * mf.log2() + mf + small_c() * mf.sqrt();
            assert!(biguint_log2(counts.level(m)) <= log_bound, "m={m}");
        }
    }

    #[test]
    fn cor53_examples() {
        let b = cor53_bound(1.0, 2).unwrap();
        assert!(close(b, (-7.0 + 4.0 * 5f64.sqrt()).exp2(), 1e-14));
        assert!(b > 3.8 && b < 3.9);
        let mut counts = DyadicCounts::new();
        assert_eq!(dyadic_delta(&mut counts, 1.0, 122), 2f64.powi(-5));
        assert!(cor53_bound(1.0, 122).unwrap() >= 2f64.powi(-5));
        let one = cor53_bound(1.0, 1024).unwrap();
        assert!(close(cor53_bound(3.0, 1024).unwrap(), one.powi(3), 1e-12));
        assert!(cor53_bound(1.0, 1).is_err());
    }

    #[test]
    fn cor54_examples() {
        let dy2 = WeightSequence::dyadic(2.0).unwrap();
        let b = cor54_bound(2.0, 2.0, 8).unwrap();
        assert!(b >= tail_norm(&dy2, 8, 2.0).unwrap().value.upper());
        assert!(matches!(
            cor54_bound(1.0, f64::INFINITY, 8),
            Err(Error::SeriesDiverges(_))
        ));
        let dy3 = WeightSequence::dyadic(3.0).unwrap();
        let b = cor54_bound(3.0, f64::INFINITY, 50).unwrap();
        assert!(b >= tail_norm(&dy3, 50, 1.0).unwrap().value.upper());
    }

    #[test]
    fn cor54_series_against_direct_partial_sum() {
        let c = cor54_series(2.0, 2.0, 1e-12).unwrap();
        let direct: f64 = (0..2000u64)
            .map(|j| (-(j as f64) * 3.0 + 16.0 * (j as f64).sqrt()).exp2())
            .sum();
        assert!((c.value - direct).abs() <= c.error + 1e-9 * direct);
    }

    #[test]
    fn cor55_examples() {
        let m16 = cor55_m_of_n(1 << 16).unwrap();
        assert!(m16 >= 6);
        let n = 1u64 << 16;
        let lb = |m: u32| big_c() * f64::from(m).powf(-0.75) * (f64::from(m) + small_c() * f64::from(m).sqrt()).exp2();
        assert!(lb(m16) <= n as f64);
        assert!(lb(m16 + 1) > n as f64);
        assert!(cor55_m_of_n(1 << 20).unwrap() > m16);
        assert!(matches!(
            cor55_m_of_n(1000),
            Err(Error::BelowValidityThreshold { n: 1000 })
        ));
    }

    #[test]
    fn cor56_examples() {
        let n = 1u64 << 16;
        let (index, bound) = cor56_bound(1.0, n).unwrap();
        assert_eq!(index, (c_tilde() * 65536.0 / 16f64.powf(0.75)).ceil() as u64);
        assert!(close(bound, 2.0 * 2f64.powi(-16) * (small_c() * 4.0).exp2(), 1e-13));
        let (_, b2) = cor56_bound(2.0, n).unwrap();
        assert!(close(b2, bound * bound, 1e-12));
        // decreasing in n, while bound * n grows like 2^{c sqrt(log2 n)}
        let mut prev = f64::INFINITY;
        for e in 16..=24 {
            let n = 1u64 << e;
            let (_, b) = cor56_bound(1.0, n).unwrap();
            assert!(b < prev, "n=2^{e}");
            assert!(close(
                b * n as f64,
                2.0 * (small_c() * f64::from(e).sqrt()).exp2(),
                1e-12
            ));
            prev = b;
        }
    }

    #[test]
    fn tran_examples() {
        let b = tran_bound(&[2.0], 1.0, 10).unwrap();
        assert!(close(
            b,
            tran_constant(1.0) * 10.0 * (-(LN_2 * 10.0 / 2.0)).exp(),
            1e-13
        ));
        assert!(close(tran_constant(0.0), (4.0 * E - 2.0) * E / (E - 1.0), 1e-15));
        assert!(tran_bound(&[1.0], 1.0, 10).is_err());
    }
}
