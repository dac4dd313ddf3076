//! Admissible weight sequences `rho` and evaluation of `rho^nu`.
//!
//! Weights are kept in the log2 domain. The two concrete families also carry
//! an exact integer key so that ties between different multiindices are
//! decided without rounding:
//!
//! * `PolyGrowth{s}`: `rho_j = (j+1)^s`, so `rho^nu = P^s` with the integer
//!   `P = prod (j+1)^{nu_j}`;
//! * `DyadicBlocks{s}`: `rho_j = 2^{k s}` for `j` in block `I_k`, so
//!   `rho^nu = 2^{s m}` with `m = sum_k k N_k(nu)`.

use std::cmp::Ordering;
use std::fmt;
use std::fs;
use std::path::Path;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;

/// Two float weights closer than this (in log2 units) are treated as equal.
pub const TIE_TOL: f64 = 1e-12;

/// Default coordinate up to which divergence of a sequence is probed.
pub const DEFAULT_PROBE_BUDGET: u64 = 10_000_000;

/// Growth formula applied beyond the explicit prefix of a custom sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailRule {
    /// `rho_j = (j+1)^s`.
    Poly { s: f64 },
    /// `rho_j = 2^{k s}`, `j` in block `I_k`.
    Dyadic { s: f64 },
    /// No coordinates beyond the prefix (the finite dimensional case).
    Finite,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SequenceKind {
    PolyGrowth { s: f64 },
    DyadicBlocks { s: f64 },
    Custom { prefix: Vec<f64>, tail: TailRule },
}

/// An admissible sequence `rho`: non-decreasing, `rho_1 > 1`, divergent.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSequence {
    kind: SequenceKind,
    prefix_log2: Vec<f64>,
    probe_budget: u64,
    label: String,
}

/// Exact representation of `rho^nu` when the family allows one.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExactWeight {
    /// `rho^nu = 2^{s m}`, stores `m`.
    Pow2Exponent(u64),
    /// `rho^nu = P^s`, stores `P`.
    Product(BigUint),
}

/// `rho^nu`, stored as its base-2 logarithm plus an optional exact key.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightValue {
    pub log2_value: f64,
    pub exact: Option<ExactWeight>,
}

impl WeightValue {
    pub fn one(seq: &WeightSequence) -> Self {
        let exact = match seq.kind {
            SequenceKind::PolyGrowth { .. } => Some(ExactWeight::Product(BigUint::one())),
            SequenceKind::DyadicBlocks { .. } => Some(ExactWeight::Pow2Exponent(0)),
            SequenceKind::Custom { .. } => None,
        };
        Self { log2_value: 0.0, exact }
    }

    /// `rho^{-nu}`.
    pub fn inverse(&self) -> f64 {
        (-self.log2_value).exp2()
    }

    /// Orders two weights, exactly when both carry the same kind of exact key.
    pub fn compare(&self, other: &Self) -> Ordering {
        match (&self.exact, &other.exact) {
            (Some(ExactWeight::Pow2Exponent(a)), Some(ExactWeight::Pow2Exponent(b))) => a.cmp(b),
            (Some(ExactWeight::Product(a)), Some(ExactWeight::Product(b))) => a.cmp(b),
            _ => {
                let d = self.log2_value - other.log2_value;
                if d.abs() < TIE_TOL {
                    Ordering::Equal
                } else if d < 0.0 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
        }
    }

    /// True when `rho^nu <= 1/eps`, given `log2(1/eps)`.
    pub fn within(&self, log2_inv_eps: f64) -> bool {
        self.log2_value <= log2_inv_eps + TIE_TOL
    }
}

/// Block index `k` with `j in I_k`: `I_1 = {1,2}`, `I_k = (2^{k-1}, 2^k]`.
pub fn block_index(j: u64) -> u32 {
    assert!(j >= 1, "block_index: j must be >= 1");
    if j <= 2 {
        1
    } else {
        64 - (j - 1).leading_zeros()
    }
}

/// Number of coordinates in block `I_k`.
pub fn block_size(k: u32) -> u64 {
    if k == 1 {
        2
    } else {
        1u64 << (k - 1)
    }
}

fn check_s(s: f64) -> Result<f64> {
    if s.is_finite() && s > 0.0 {
        Ok(s)
    } else {
        Err(Error::NotAdmissible(format!("s must be a positive real, got {s}")))
    }
}

impl TailRule {
    fn log2_rho(&self, j: u64) -> Option<f64> {
        match *self {
            TailRule::Poly { s } => Some(s * ((j + 1) as f64).log2()),
            TailRule::Dyadic { s } => Some(s * f64::from(block_index(j))),
            TailRule::Finite => None,
        }
    }

    fn label(&self) -> String {
        match self {
            TailRule::Poly { s } => format!("poly:s={s}"),
            TailRule::Dyadic { s } => format!("dyadic:s={s}"),
            TailRule::Finite => "finite".into(),
        }
    }
}

/// Largest `j >= 1` with `s*log2(j+1) <= t`, 0 if none; `None` past `budget`.
fn poly_last_within(s: f64, t: f64, budget: u64) -> Option<u64> {
    let ok = |j: u64| s * ((j + 1) as f64).log2() <= t + TIE_TOL;
    let guess = ((t + TIE_TOL) / s).exp2();
    if !guess.is_finite() || guess > budget as f64 + 2.0 {
        return None;
    }
    let mut j = (guess.floor() as u64).saturating_sub(1);
    while ok(j + 1) {
        j += 1;
    }
    while j >= 1 && !ok(j) {
        j -= 1;
    }
    (j <= budget).then_some(j)
}

/// Largest `j >= 1` with `s*block_index(j) <= t`, 0 if none.
fn dyadic_last_within(s: f64, t: f64, budget: u64) -> Option<u64> {
    let kmax = ((t + TIE_TOL) / s).floor();
    if kmax < 1.0 {
        return Some(0);
    }
    if kmax > 62.0 {
        return None;
    }
    let d = 1u64 << (kmax as u32);
    (d <= budget).then_some(d)
}

impl WeightSequence {
    /// `rho_j(s) = (j+1)^s`.
    pub fn poly(s: f64) -> Result<Self> {
        let s = check_s(s)?;
        Ok(Self {
            kind: SequenceKind::PolyGrowth { s },
            prefix_log2: Vec::new(),
            probe_budget: DEFAULT_PROBE_BUDGET,
            label: format!("poly:s={s}"),
        })
    }

    /// `rho*_j(s) = 2^{k s}` on the dyadic blocks `I_k`.
    pub fn dyadic(s: f64) -> Result<Self> {
        let s = check_s(s)?;
        Ok(Self {
            kind: SequenceKind::DyadicBlocks { s },
            prefix_log2: Vec::new(),
            probe_budget: DEFAULT_PROBE_BUDGET,
            label: format!("dyadic:s={s}"),
        })
    }

    /// An explicit prefix `rho_1, ..., rho_L` followed by a tail rule.
    pub fn custom(prefix: Vec<f64>, tail: TailRule) -> Result<Self> {
        match tail {
            TailRule::Poly { s } | TailRule::Dyadic { s } => {
                check_s(s)?;
            }
            TailRule::Finite if prefix.is_empty() => {
                return Err(Error::NotAdmissible(
                    "a finite sequence needs at least one entry".into(),
                ));
            }
            TailRule::Finite => {}
        }
        for (i, &r) in prefix.iter().enumerate() {
            if !r.is_finite() {
                return Err(Error::NotAdmissible(format!("rho_{} is not finite", i + 1)));
            }
            if i == 0 && r <= 1.0 {
                return Err(Error::NotAdmissible(format!("rho_1 = {r} must exceed 1")));
            }
            if i > 0 && r < prefix[i - 1] {
                return Err(Error::NotAdmissible(format!(
                    "sequence decreases at j={}: {} > {r}",
                    i + 1,
                    prefix[i - 1]
                )));
            }
        }
        let len = prefix.len() as u64;
        if let (Some(&last), Some(next)) = (prefix.last(), tail.log2_rho(len + 1)) {
            if last.log2() > next + TIE_TOL {
                return Err(Error::NotAdmissible(format!(
                    "tail rule value at j={} is below rho_{len} = {last}",
                    len + 1
                )));
            }
        }
        let prefix_log2 = prefix.iter().map(|r| r.log2()).collect();
        let label = format!(
            "custom:[{}];tail={}",
            prefix.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","),
            tail.label()
        );
        Ok(Self {
            kind: SequenceKind::Custom { prefix, tail },
            prefix_log2,
            probe_budget: DEFAULT_PROBE_BUDGET,
            label,
        })
    }

    /// Parses `poly:s=<real>`, `dyadic:s=<real>` or `custom:file=<path>`.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (family, arg) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad sequence spec {spec:?}")))?;
        let mut seq = match family {
            "poly" => Self::poly(parse_s(arg)?)?,
            "dyadic" => Self::dyadic(parse_s(arg)?)?,
            "custom" => {
                let path = arg
                    .strip_prefix("file=")
                    .ok_or_else(|| Error::Parse(format!("expected custom:file=<path>, got {spec:?}")))?;
                Self::from_custom_file(Path::new(path))?
            }
            _ => return Err(Error::Parse(format!("unknown sequence family {family:?}"))),
        };
        seq.label = spec.to_string();
        Ok(seq)
    }

    /// Reads one `rho_j` per line, optionally ending with `tail poly:s=..`
    /// or `tail dyadic:s=..`. Without a tail line the sequence is finite.
    pub fn from_custom_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_custom_text(&text)
    }

    pub fn from_custom_text(text: &str) -> Result<Self> {
        let mut prefix = Vec::new();
        let mut tail = TailRule::Finite;
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .peekable();
        while let Some(line) = lines.next() {
            if let Some(rule) = line.strip_prefix("tail") {
                if lines.peek().is_some() {
                    return Err(Error::Parse("the tail line must be last".into()));
                }
                let rule = rule.trim();
                let (family, arg) = rule
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("bad tail rule {rule:?}")))?;
                tail = match family {
                    "poly" => TailRule::Poly { s: parse_s(arg)? },
                    "dyadic" => TailRule::Dyadic { s: parse_s(arg)? },
                    _ => return Err(Error::Parse(format!("unknown tail family {family:?}"))),
                };
            } else {
                let r: f64 = line.parse().map_err(|_| Error::Parse(format!("bad weight {line:?}")))?;
                prefix.push(r);
            }
        }
        Self::custom(prefix, tail)
    }

    /// Sets the coordinate up to which divergence is probed.
    pub fn with_probe_budget(mut self, budget: u64) -> Self {
        self.probe_budget = budget;
        self
    }

    pub fn kind(&self) -> &SequenceKind {
        &self.kind
    }

    pub fn probe_budget(&self) -> u64 {
        self.probe_budget
    }

    /// Specification string this sequence was built from.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// The growth parameter `s` of the two concrete families.
    pub fn s(&self) -> Option<f64> {
        match self.kind {
            SequenceKind::PolyGrowth { s } | SequenceKind::DyadicBlocks { s } => Some(s),
            SequenceKind::Custom { .. } => None,
        }
    }

    /// Number of coordinates for a finite sequence.
    pub fn finite_len(&self) -> Option<u64> {
        match &self.kind {
            SequenceKind::Custom {
                prefix,
                tail: TailRule::Finite,
            } => Some(prefix.len() as u64),
            _ => None,
        }
    }

    /// `log2(rho_j)`.
    pub fn log2_rho(&self, j: u64) -> Result<f64> {
        if j == 0 {
            return Err(Error::InvalidArgument("coordinates start at 1".into()));
        }
        match &self.kind {
            SequenceKind::PolyGrowth { s } => Ok(s * ((j + 1) as f64).log2()),
            SequenceKind::DyadicBlocks { s } => Ok(s * f64::from(block_index(j))),
            SequenceKind::Custom { tail, .. } => match self.prefix_log2.get(j as usize - 1) {
                Some(&v) => Ok(v),
                None => tail.log2_rho(j).ok_or(Error::SequenceUndefined(j)),
            },
        }
    }

    /// `rho_j`.
    pub fn rho_j(&self, j: u64) -> Result<f64> {
        if j == 0 {
            return Err(Error::InvalidArgument("coordinates start at 1".into()));
        }
        match &self.kind {
            SequenceKind::PolyGrowth { s } => Ok(((j + 1) as f64).powf(*s)),
            SequenceKind::DyadicBlocks { s } => Ok((s * f64::from(block_index(j))).exp2()),
            SequenceKind::Custom { prefix, tail } => match prefix.get(j as usize - 1) {
                Some(&v) => Ok(v),
                None => match *tail {
                    TailRule::Poly { s } => Ok(((j + 1) as f64).powf(s)),
                    TailRule::Dyadic { s } => Ok((s * f64::from(block_index(j))).exp2()),
                    TailRule::Finite => Err(Error::SequenceUndefined(j)),
                },
            },
        }
    }

    /// `rho^nu`.
    pub fn weight(&self, nu: &MultiIndex) -> Result<WeightValue> {
        match &self.kind {
            SequenceKind::DyadicBlocks { s } => {
                let m: u64 = nu
                    .entries()
                    .iter()
                    .map(|&(j, e)| u64::from(block_index(u64::from(j))) * u64::from(e))
                    .sum();
                Ok(WeightValue {
                    log2_value: s * m as f64,
                    exact: Some(ExactWeight::Pow2Exponent(m)),
                })
            }
            SequenceKind::PolyGrowth { s } => {
                let mut p = BigUint::one();
                for &(j, e) in nu.entries() {
                    p *= BigUint::from(u64::from(j) + 1).pow(e);
                }
                let log2_value = s * biguint_log2(&p);
                Ok(WeightValue {
                    log2_value,
                    exact: Some(ExactWeight::Product(p)),
                })
            }
            SequenceKind::Custom { .. } => {
                let mut acc = 0.0;
                for &(j, e) in nu.entries() {
                    acc += f64::from(e) * self.log2_rho(u64::from(j))?;
                }
                Ok(WeightValue {
                    log2_value: acc,
                    exact: None,
                })
            }
        }
    }

    /// `rho^{nu + e_j}` from `rho^nu`.
    pub fn child_weight(&self, parent: &WeightValue, j: u64) -> Result<WeightValue> {
        match (&self.kind, &parent.exact) {
            (SequenceKind::DyadicBlocks { s }, Some(ExactWeight::Pow2Exponent(m))) => {
                let m = m + u64::from(block_index(j));
                Ok(WeightValue {
                    log2_value: s * m as f64,
                    exact: Some(ExactWeight::Pow2Exponent(m)),
                })
            }
            (SequenceKind::PolyGrowth { s }, Some(ExactWeight::Product(p))) => {
                let p = p * BigUint::from(j + 1);
                Ok(WeightValue {
                    log2_value: s * biguint_log2(&p),
                    exact: Some(ExactWeight::Product(p)),
                })
            }
            _ => Ok(WeightValue {
                log2_value: parent.log2_value + self.log2_rho(j)?,
                exact: None,
            }),
        }
    }

    /// `D(eps)`: the largest `j` with `rho_j <= 1/eps`, 0 if none.
    pub fn truncation_dimension(&self, eps: f64) -> Result<u64> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        self.truncation_dimension_log2(-eps.log2())
    }

    /// `D` for the threshold `rho_j <= 2^t`.
    pub fn truncation_dimension_log2(&self, t: f64) -> Result<u64> {
        let budget = self.probe_budget;
        let fail = || Error::CannotCertifyDivergence {
            threshold: t.exp2(),
            budget,
        };
        match &self.kind {
            SequenceKind::PolyGrowth { s } => poly_last_within(*s, t, budget).ok_or_else(fail),
            SequenceKind::DyadicBlocks { s } => dyadic_last_within(*s, t, budget).ok_or_else(fail),
            SequenceKind::Custom { tail, .. } => {
                let within = self.prefix_log2.iter().take_while(|&&v| v <= t + TIE_TOL).count() as u64;
                let len = self.prefix_log2.len() as u64;
                if within < len {
                    return Ok(within);
                }
                let from_tail = match *tail {
                    TailRule::Finite => Some(len),
                    TailRule::Poly { s } => poly_last_within(s, t, budget),
                    TailRule::Dyadic { s } => dyadic_last_within(s, t, budget),
                }
                .ok_or_else(fail)?;
                Ok(from_tail.max(len))
            }
        }
    }
}

impl fmt::Display for WeightSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn parse_s(arg: &str) -> Result<f64> {
    let v = arg
        .strip_prefix("s=")
        .ok_or_else(|| Error::Parse(format!("expected s=<real>, got {arg:?}")))?;
    v.parse().map_err(|_| Error::Parse(format!("bad real {v:?}")))
}

pub(crate) fn biguint_log2(p: &BigUint) -> f64 {
    let bits = p.bits();
    if bits <= 1000 {
        p.to_f64().expect("fits in f64").log2()
    } else {
        let shift = bits - 64;
        let top = (p >> shift).to_f64().expect("64 bits");
        top.log2() + shift as f64
    }
}
