//! Invariant suites shared by the `verify` subcommand and the test targets.
//!
//! Every suite returns one [`Check`] per property; a suite passes iff all of
//! its checks pass. Large sweeps are folded into a single check that reports
//! the number of violations.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::Serialize;

use crate::bounds::{
    asymptotic_count_bound, big_to_f64, cor53_bound, cor54_bound, cor55_lhs, cor55_m_of_n, cor56_bound,
    count_upper_bound, dyadic_delta, interpolation_bound, lq_norm_product, simplex_lattice_bounds, tail_norm,
    SimplexSpec,
};
use crate::construct::build_lambda;
use crate::error::{Error, Result};
use crate::partitions::{exact_lambda_count, multiplicative_lambda_count, sm_series, CountTable, DyadicCounts};
use crate::weights::{TailRule, WeightSequence};

/// `#Lambda(2^{-m s}, rho*(s))` for `m = 0..=10`, as published.
pub const TABLE1_CARDINALITIES: [u64; 11] = [1, 3, 8, 20, 50, 122, 298, 718, 1723, 4101, 9712];

/// The published `2^{-m s}` columns, row `m`, column `s - 1`, as
/// `(mantissa, decimal exponent)`.
pub const TABLE1_POWERS: [[(&str, i32); 4]; 11] = [
    [("1.0000", 0), ("1.0000", 0), ("1.0000", 0), ("1.0000", 0)],
    [("5.0000", -1), ("2.5000", -1), ("1.2500", -1), ("6.2500", -2)],
    [("2.5000", -1), ("6.2500", -2), ("1.5625", -2), ("3.9062", -3)],
    [("1.2500", -1), ("1.5625", -2), ("1.9531", -3), ("2.4414", -4)],
    [("6.2500", -2), ("3.9062", -3), ("2.4414", -4), ("1.5259", -5)],
    [("3.1250", -2), ("9.7656", -4), ("3.0518", -5), ("9.5367", -7)],
    [("1.5625", -2), ("2.4414", -4), ("3.8147", -6), ("5.9605", -8)],
    [("7.8125", -3), ("6.1035", -5), ("4.7684", -7), ("3.7253", -9)],
    [("3.9062", -3), ("1.5259", -5), ("5.9605", -8), ("2.3283", -10)],
    [("1.9531", -3), ("3.8147", -6), ("7.4506", -9), ("1.4552", -11)],
    [("9.7656", -4), ("9.5367", -7), ("9.3132", -10), ("9.0949", -13)],
];

/// `2^{-m s}` in the four-digit scientific layout of the published table.
pub fn format_power(m: u32, s: u32) -> String {
    format!("{:.4e}", (-f64::from(m * s)).exp2())
}

/// The published `2^{-m s}` entry in the layout of [`format_power`], for
/// `m <= 10` and `1 <= s <= 4`.
pub fn published_power(m: u32, s: u32) -> Option<String> {
    let row = TABLE1_POWERS.get(m as usize)?;
    let (mant, exp) = row.get((s as usize).checked_sub(1)?)?;
    Some(format!("{mant}e{exp}"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Domination,
    Sandwich,
    Bracket,
    Oracle,
    Table1,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Table1,
        Suite::Oracle,
        Suite::Domination,
        Suite::Sandwich,
        Suite::Bracket,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Domination => "domination",
            Suite::Sandwich => "sandwich",
            Suite::Bracket => "bracket",
            Suite::Oracle => "oracle",
            Suite::Table1 => "table1",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub fn run_suite(suite: Suite) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Table1 => table1_checks(10)?,
        Suite::Oracle => oracle_checks(12, 200)?,
        Suite::Domination => domination_checks()?,
        Suite::Sandwich => sandwich_checks()?,
        Suite::Bracket => bracket_checks(4, 6),
    };
    Ok(SuiteReport { suite, checks })
}

/// Folds a sweep into one check: passes iff `violations` stays empty.
fn sweep(name: impl Into<String>, total: usize, violations: &[String]) -> Check {
    let detail = match violations.first() {
        None => format!("{total} instances, 0 violations"),
        Some(first) => format!("{total} instances, {} violations, first: {first}", violations.len()),
    };
    Check::new(name, violations.is_empty(), detail)
}

/// Published cardinalities against both exact counting routes and the tree
/// search for `s = 1..4`; the `2^{-m s}` columns against their printed form.
pub fn table1_checks(m_max: u32) -> Result<Vec<Check>> {
    let m_max = m_max.min(10);
    let table = CountTable::compute(m_max);
    let series = sm_series(m_max);
    let mut checks = Vec::new();
    let mut acc = BigUint::default();
    for row in &table.rows {
        let m = row.m as usize;
        acc += &series[m];
        let golden = BigUint::from(TABLE1_CARDINALITIES[m]);
        checks.push(Check::new(
            format!("cardinality m={m}"),
            row.cumulative == golden && acc == golden,
            format!("partitions {}, series {acc}, published {golden}", row.cumulative),
        ));
    }
    let mut bad = Vec::new();
    let mut total = 0;
    for s in 1..=4u32 {
        let seq = WeightSequence::dyadic(f64::from(s))?;
        for m in 0..=m_max {
            total += 1;
            let got = build_lambda(&seq, (-f64::from(m * s)).exp2())?.len() as u64;
            if got != TABLE1_CARDINALITIES[m as usize] {
                bad.push(format!("s={s} m={m}: {got}"));
            }
        }
    }
    checks.push(sweep(
        "tree search reproduces the cardinalities for s=1..4",
        total,
        &bad,
    ));
    let mut bad = Vec::new();
    for m in 0..=m_max {
        for s in 1..=4u32 {
            let v = (-f64::from(m * s)).exp2();
            let exact = v.to_bits() == f64::from_bits(((1023 - i64::from(m * s)) as u64) << 52).to_bits();
            let printed = format_power(m, s);
            let golden = published_power(m, s).expect("m <= 10, s <= 4");
            if !exact || printed != golden {
                bad.push(format!("m={m} s={s}: {printed} vs {golden}"));
            }
        }
    }
    checks.push(sweep("2^(-ms) columns", 4 * (m_max as usize + 1), &bad));
    Ok(checks)
}

/// Tree search against the two independent exact counts.
pub fn oracle_checks(m_max: u32, n_max: u64) -> Result<Vec<Check>> {
    let dy = WeightSequence::dyadic(1.0)?;
    let mut checks = Vec::new();
    for m in 0..=m_max {
        let got = build_lambda(&dy, (-f64::from(m)).exp2())?.len();
        let want = exact_lambda_count(m);
        checks.push(Check::new(
            format!("dyadic s=1 m={m}"),
            BigUint::from(got) == want,
            format!("tree search {got}, partition count {want}"),
        ));
    }
    let poly = WeightSequence::poly(1.0)?;
    let mut bad = Vec::new();
    for n in 1..=n_max {
        let got = build_lambda(&poly, 1.0 / n as f64)?.len();
        let want = multiplicative_lambda_count(n);
        if BigUint::from(got) != want {
            bad.push(format!("N={n}: tree search {got}, factorizations {want}"));
        }
    }
    checks.push(sweep(format!("poly s=1 eps=1/N, N=1..{n_max}"), n_max as usize, &bad));
    Ok(checks)
}

/// Sequences and thresholds on which the dimension-dependent count bound
/// is tested.
pub fn count_bound_instances() -> Result<Vec<(WeightSequence, f64)>> {
    let mut out = Vec::new();
    for s in [1.0, 2.0] {
        let seq = WeightSequence::poly(s)?;
        for k in [2u32, 3, 5, 8, 13, 21] {
            out.push((seq.clone(), 1.0 / f64::from(k)));
        }
    }
    for s in [1.0, 0.5] {
        let seq = WeightSequence::dyadic(s)?;
        for m in 1..=5 {
            out.push((seq.clone(), (-f64::from(m)).exp2()));
        }
    }
    let custom = WeightSequence::custom(vec![1.5, 2.0, 2.0, 3.5], TailRule::Poly { s: 1.0 })?;
    for eps in [0.5, 0.2, 0.05] {
        out.push((custom.clone(), eps));
    }
    Ok(out)
}

pub fn domination_checks() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut counts = DyadicCounts::new();

    let mut bad = Vec::new();
    for m in 2..=12 {
        let b = asymptotic_count_bound(m).combined;
        let exact = big_to_f64(&exact_lambda_count(m));
        if !(b >= exact) {
            bad.push(format!("m={m}: bound {b} < {exact}"));
        }
    }
    checks.push(sweep("lemma52 combined bound >= #Lambda(2^-m), 2<=m<=12", 11, &bad));

    for s in 1..=4u32 {
        let s = f64::from(s);
        let mut bad = Vec::new();
        for n in 2..=9712u64 {
            let b = cor53_bound(s, n)?;
            let d = dyadic_delta(&mut counts, s, n);
            if !(b >= d) {
                bad.push(format!("n={n}: {b} < {d}"));
            }
        }
        checks.push(sweep(format!("cor53 bound >= delta_n, s={s}, 2<=n<=9712"), 9711, &bad));
    }

    let instances = count_bound_instances()?;
    let mut bad = Vec::new();
    for (seq, eps) in &instances {
        let b = count_upper_bound(seq, *eps)?;
        let exact = build_lambda(seq, *eps)?.len() as f64;
        if !(b >= exact) {
            bad.push(format!("{seq} eps={eps}: {b} < {exact}"));
        }
    }
    checks.push(sweep("lemma42 bound >= #Lambda(eps)", instances.len(), &bad));

    for (s, p, n) in [
        (2.0, 2.0, 8u64),
        (3.0, f64::INFINITY, 50),
        (2.0, 2.0, 100),
        (2.0, 4.0, 20),
    ] {
        let seq = WeightSequence::dyadic(s)?;
        let b = cor54_bound(s, p, n)?;
        let q = crate::bounds::conjugate(p)?;
        let t = tail_norm(&seq, n as usize, q)?.value;
        checks.push(Check::new(
            format!("cor54 bound >= delta_(n,q), s={s} p={p} n={n}"),
            b >= t.upper(),
            format!("bound {b:e}, delta {:e} +- {:e}", t.value, t.error),
        ));
    }

    for (s, n, p, r) in [(2.0, 8usize, 2.0, 1.0), (2.0, 3, 1.0, 1.0), (3.0, 20, 2.0, 0.5)] {
        let seq = WeightSequence::dyadic(s)?;
        let i = interpolation_bound(&seq, n, p, r)?;
        let target = i.target.lower();
        checks.push(Check::new(
            format!("interpolation bounds >= delta_(n,q), s={s} n={n} p={p} r={r}"),
            i.geometric >= target * (1.0 - 1e-12) && i.power >= target * (1.0 - 1e-12),
            format!(
                "geometric {:e}, power {:e}, delta {:e}",
                i.geometric, i.power, i.target.value
            ),
        ));
    }

    for e in [16u32, 18, 20] {
        let n = 1u64 << e;
        let m = cor55_m_of_n(n)?;
        let k = f64::from(e);
        let defining = cor55_lhs(m) <= k && cor55_lhs(m + 1) > k;
        let mut ok = defining && (e != 16 || m >= 6);
        let mut detail = format!("m(n)={m}");
        for s in 1..=4u32 {
            let s = f64::from(s);
            let d = dyadic_delta(&mut counts, s, n);
            ok &= d <= (-f64::from(m) * s).exp2();
        }
        let (index, bound) = cor56_bound(1.0, n)?;
        let d = dyadic_delta(&mut counts, 1.0, index);
        ok &= d <= bound;
        detail.push_str(&format!(", cor56 index {index}: delta {d:e} <= {bound:e}"));
        checks.push(Check::new(format!("cor55/cor56 at n=2^{e}"), ok, detail));
    }
    Ok(checks)
}

/// `(family, s, q)` grid for the product sandwich; `s q` differs within
/// each family, so no two products coincide.
pub fn sandwich_grid() -> Result<Vec<(WeightSequence, f64)>> {
    let mut grid = Vec::new();
    for (s, q) in [(1.2, 1.0), (1.0, 1.5), (2.0, 1.0), (1.0, 3.0), (2.0, 2.0), (3.0, 2.0)] {
        grid.push((WeightSequence::poly(s)?, q));
    }
    for (s, q) in [(0.5, 2.5), (1.0, 1.5), (2.0, 1.0), (3.0, 1.0), (1.0, 4.0), (3.0, 2.0)] {
        grid.push((WeightSequence::dyadic(s)?, q));
    }
    Ok(grid)
}

pub const SANDWICH_REL_TOL: f64 = 1e-10;

pub fn sandwich_checks() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (seq, q) in sandwich_grid()? {
        let l = lq_norm_product(&seq, q)?;
        let rel = l.product.rel_error().max(l.sequence_norm_q.rel_error());
        checks.push(Check::new(
            format!("{seq} q={q}"),
            l.sandwich_holds() && rel < SANDWICH_REL_TOL,
            format!(
                "{:.6} <= {:.6} <= {:.6}, rel error {rel:.1e}",
                l.lower_sandwich, l.product.value, l.upper_sandwich
            ),
        ));
    }
    Ok(checks)
}

/// Every integer-sided simplex with `D <= d_max`, `a_j <= a_max`.
pub fn bracket_checks(d_max: usize, a_max: u32) -> Vec<Check> {
    let mut checks = Vec::new();
    for d in 1..=d_max {
        let mut sides = vec![1u32; d];
        let mut bad = Vec::new();
        let mut total = 0;
        loop {
            total += 1;
            let spec =
                SimplexSpec::new(sides.iter().map(|&a| f64::from(a)).collect()).expect("integer sides >= 1 are valid");
            let (lo, hi) = simplex_lattice_bounds(&spec);
            let count = spec.lattice_count() as f64;
            if !(lo <= count && count <= hi) {
                bad.push(format!("{sides:?}: {count} not in [{lo}, {hi}]"));
            }
            // odometer over {1..a_max}^d
            let mut i = 0;
            while i < d && sides[i] == a_max {
                sides[i] = 1;
                i += 1;
            }
            if i == d {
                break;
            }
            sides[i] += 1;
        }
        checks.push(sweep(format!("D={d}, 1<=a_j<={a_max}"), total, &bad));
    }
    checks
}
