//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lowerset::bounds::{
    bd_example, big_c, c_tilde, cor55_lhs, cor55_m_of_n, cor56_bound, dyadic_delta, small_c, tail_norm,
};
use lowerset::construct::{build_lambda, build_lambda_n, delta_sequence};
use lowerset::partitions::DyadicCounts;
use lowerset::surrogate::{class_norm, extremal_instance, monte_carlo_error, SurrogateFunction};
use lowerset::verify::{
    bracket_checks, domination_checks, oracle_checks, published_power, sandwich_checks, Check, TABLE1_CARDINALITIES,
};
use lowerset::weights::{TailRule, WeightSequence};

struct Outcome {
    passed: bool,
    summary: String,
}

impl Outcome {
    fn new(passed: bool, summary: impl Into<String>) -> Self {
        Self {
            passed,
            summary: summary.into(),
        }
    }
}

fn all_pass(checks: &[Check]) -> (bool, String) {
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.passed).collect();
    match failed.first() {
        None => (true, format!("{} checks pass", checks.len())),
        Some(c) => (
            false,
            format!(
                "{} of {} checks fail, first: {}: {}",
                failed.len(),
                checks.len(),
                c.name,
                c.detail
            ),
        ),
    }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

/// Table 1 through the CLI: cardinalities and `2^{-ms}` columns.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_lowerset"))
        .args(["counts", "--mmax", "10", "--check", "--format", "md"])
        .output()
        .expect("binary runs");
    let elapsed = start.elapsed();
    let text = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<Vec<String>> = text
        .lines()
        .skip(2)
        .map(|l| l.trim_matches('|').split('|').map(|c| c.trim().to_string()).collect())
        .collect();
    let mut bad = Vec::new();
    if rows.len() != 11 {
        bad.push(format!("{} rows", rows.len()));
    }
    for (m, row) in rows.iter().enumerate() {
        if row[1] != TABLE1_CARDINALITIES[m].to_string() {
            bad.push(format!("m={m} cardinality {}", row[1]));
        }
        for s in 1..=4u32 {
            let want = published_power(m as u32, s).unwrap();
            if row[1 + s as usize] != want {
                bad.push(format!("m={m} s={s}: {} vs {want}", row[1 + s as usize]));
            }
            // bit-exact value behind the printed column
            let v = (-f64::from(m as u32 * s)).exp2();
            if v.to_bits() != ((1023 - u64::from(m as u32 * s)) << 52) {
                bad.push(format!("m={m} s={s}: 2^-ms not exact"));
            }
        }
    }
    let ok = out.status.success() && bad.is_empty() && within(elapsed, 1.0);
    Outcome::new(
        ok,
        format!(
            "exit {:?}, 11 rows x (cardinality + 4 columns), {} mismatches, {:.3}s",
            out.status.code(),
            bad.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let checks = oracle_checks(12, 200).expect("oracle suite runs");
    let elapsed = start.elapsed();
    let (ok, s) = all_pass(&checks);
    Outcome::new(
        ok && within(elapsed, 30.0),
        format!("{s}, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn criterion_3() -> Outcome {
    let mut bad = Vec::new();
    for m in 0..=8u32 {
        let reference = build_lambda(&WeightSequence::dyadic(1.0).unwrap(), (-f64::from(m)).exp2()).unwrap();
        for s in 2..=4u32 {
            let seq = WeightSequence::dyadic(f64::from(s)).unwrap();
            let set = build_lambda(&seq, (-f64::from(m * s)).exp2()).unwrap();
            if set.len() != reference.len() || set != reference {
                bad.push(format!("m={m} s={s}: {} vs {}", set.len(), reference.len()));
            }
        }
    }
    Outcome::new(
        bad.is_empty(),
        format!("m=0..8, s=1..4, {} mismatches {bad:?}", bad.len()),
    )
}

fn criterion_4() -> Outcome {
    let mut counts = DyadicCounts::new();
    let mut parts = Vec::new();
    let mut ok = true;
    for (s, n) in [(1u32, 4101usize), (2, 50), (3, 20), (4, 8)] {
        let seq = WeightSequence::dyadic(f64::from(s)).unwrap();
        let d = delta_sequence(&seq, n + 1).unwrap().get(n + 1).unwrap();
        let exact = dyadic_delta(&mut counts, f64::from(s), n as u64 + 1);
        ok &= d <= 1e-3 && d == exact;
        parts.push(format!("s={s} n={n}: delta_(n+1)={d:e}"));
    }
    Outcome::new(ok, parts.join(", "))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut checks = domination_checks().expect("domination suite runs");
    checks.extend(bracket_checks(4, 6));
    let elapsed = start.elapsed();
    let lemma42 = checks
        .iter()
        .find(|c| c.name.starts_with("lemma42"))
        .map(|c| c.detail.clone())
        .unwrap_or_default();
    let enough = lemma42
        .split_whitespace()
        .next()
        .and_then(|n| n.parse::<usize>().ok())
        .unwrap_or(0)
        >= 20;
    let (ok, s) = all_pass(&checks);
    Outcome::new(
        ok && enough && within(elapsed, 60.0),
        format!("{s} (lemma42: {lemma42}), {:.2}s", elapsed.as_secs_f64()),
    )
}

fn criterion_6() -> Outcome {
    let checks = sandwich_checks().expect("sandwich suite runs");
    let (ok, s) = all_pass(&checks);
    Outcome::new(
        ok && checks.len() >= 12,
        format!("{s} on {} (family, s, q) points", checks.len()),
    )
}

fn criterion_7() -> Outcome {
    let seq = WeightSequence::dyadic(2.0).unwrap();
    let mut failures = Vec::new();
    let mut worst = Vec::new();
    for p in [1.0, 2.0, f64::INFINITY] {
        let mut max_rel: f64 = 0.0;
        for n in [1usize, 3, 8, 20] {
            let inst = extremal_instance(&seq, p, n, 10_000).unwrap();
            let norm = class_norm(&inst.function, &seq, p).unwrap();
            let delta = inst.class_error.value.value;
            let rel = inst.truncation_bound() / delta;
            max_rel = max_rel.max(rel);
            if !inst.within_remainder() || norm > 1.0 + 1e-12 {
                failures.push(format!(
                    "p={p} n={n}: E*={} outside remainder of {delta}",
                    inst.surrogate_error
                ));
            }
            if rel > 1e-6 {
                failures.push(format!("p={p} n={n}: remainder {rel:.2e} relative"));
            }
        }
        worst.push(format!("p={p}: max remainder {max_rel:.2e}"));
    }
    for n in [1usize, 3, 8, 20] {
        let inst = extremal_instance(&seq, 1.0, n, 1).unwrap();
        let target = tail_norm(&seq, n, f64::INFINITY).unwrap().value.value;
        if inst.surrogate_error != target {
            failures.push(format!("p=1 budget=1 n={n}: {} != {target}", inst.surrogate_error));
        }
    }
    let summary = format!("{}; {} failures {:?}", worst.join(", "), failures.len(), failures);
    Outcome::new(failures.is_empty(), summary)
}

fn criterion_8() -> Outcome {
    const SEED: u64 = 20_240_601;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for i in 0..50u64 {
        let s = rng.gen_range(1.5..3.0);
        let seq = if rng.gen_bool(0.5) {
            WeightSequence::poly(s).unwrap()
        } else {
            WeightSequence::dyadic(s).unwrap()
        };
        let n = rng.gen_range(1..30usize);
        let (lambda, _) = build_lambda_n(&seq, n).unwrap();
        let u = if i % 2 == 0 {
            let p = [1.0, 1.5, 2.0, 4.0, f64::INFINITY][rng.gen_range(0..5)];
            extremal_instance(&seq, p, n, 40).unwrap().function
        } else {
            // random coefficients below rho^{-nu} on the first indices
            let d = delta_sequence(&seq, n + 40).unwrap();
            let (set, _) = build_lambda_n(&seq, d.horizon()).unwrap();
            let coeffs: Vec<_> = set
                .members()
                .iter()
                .map(|nu| (nu.clone(), rng.gen_range(0.0..1.0) * seq.weight(nu).unwrap().inverse()))
                .collect();
            SurrogateFunction::new(coeffs).unwrap()
        };
        let r = monte_carlo_error(&u, &lambda, 10_000, SEED + i).unwrap();
        worst = worst.max(r.sup_error / r.surrogate_error.max(f64::MIN_POSITIVE));
        violations += usize::from(!r.dominated());
    }
    Outcome::new(
        violations == 0,
        format!("50 instances x 10^4 samples, seed {SEED}, {violations} violations, max sup/E* ratio {worst:.3}"),
    )
}

/// `#{nu in N^d : prod_j (j+1)^{nu_j} <= d+1}` by direct recursion.
fn brute_count(d: u64) -> u64 {
    fn rec(j: u64, d: u64, budget: u64) -> u64 {
        if j > d {
            return 1;
        }
        let mut total = 0;
        let mut p = 1;
        while p <= budget {
            total += rec(j + 1, d, budget / p);
            p *= j + 1;
        }
        total
    }
    rec(1, d, d + 1)
}

fn criterion_9() -> Outcome {
    let mut ok = true;
    for d in 1..=30 {
        let (b, lower) = bd_example(d).unwrap();
        ok &= b >= lower;
    }
    let mut gap10 = 0.0;
    for d in 1..=10u32 {
        let (b, _) = bd_example(d).unwrap();
        let exact = brute_count(u64::from(d));
        let prefix: Vec<f64> = (2..=d + 1).map(f64::from).collect();
        let seq = WeightSequence::custom(prefix, TailRule::Finite).unwrap();
        let tree = build_lambda(&seq, 1.0 / f64::from(d + 1)).unwrap().len() as u64;
        ok &= tree == exact && b >= exact as f64;
        if d == 10 {
            gap10 = b / exact as f64;
        }
    }
    let exact10 = brute_count(10);
    Outcome::new(
        ok,
        format!(
            "B(d) >= e^-1 d^-1/2 (e/2)^d for d<=30; B(d) >= exact for d<=10; at d=10 exact {exact10}, gap factor {gap10:.1} ({})",
            if gap10 >= 10.0 { ">= 10" } else { "< 10" }
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    let m16 = cor55_m_of_n(1 << 16).unwrap();
    ok &= m16 >= 6;
    for e in [16u32, 18, 20] {
        let m = cor55_m_of_n(1 << e).unwrap();
        let k = f64::from(e);
        ok &= cor55_lhs(m) <= k && cor55_lhs(m + 1) > k;
        parts.push(format!("m(2^{e})={m}"));
    }
    let c_big = 1.0 / (1.0 - 2f64.powf(-0.25));
    let c_small = std::f64::consts::PI * (2.0f64 / 3.0).sqrt() / std::f64::consts::LN_2;
    let c_t = c_big * (1.0 - c_small / 4.0).powf(-0.75);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    ok &= rel(big_c(), c_big) < 1e-12 && rel(small_c(), c_small) < 1e-12 && rel(c_tilde(), c_t) < 1e-12;
    for e in [16u32, 18, 20] {
        for s in [1.0, 2.0] {
            let n = 1u64 << e;
            let nf = n as f64;
            let (index, bound) = cor56_bound(s, n).unwrap();
            let lg = nf.log2();
            let want_index = (c_t * nf / lg.powf(0.75)).ceil() as u64;
            let want_bound = 2f64.powf(s) * nf.powf(-s) * nf.powf(c_small * s / lg.sqrt());
            ok &= index == want_index && rel(bound, want_bound) < 1e-12;
        }
    }
    parts.push(format!("C={c_big:.12} c={c_small:.12} C~={c_t:.12}"));
    Outcome::new(ok, parts.join(", "))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "golden cardinality table", criterion_1),
        (2, "oracle equivalence", criterion_2),
        (3, "s-independence", criterion_3),
        (4, "accuracy 1e-3 cardinalities", criterion_4),
        (5, "bound domination", criterion_5),
        (6, "l_q product sandwich", criterion_6),
        (7, "extremal sharpness", criterion_7),
        (8, "Monte Carlo error domination", criterion_8),
        (9, "B(d) deficiency", criterion_9),
        (10, "m(n) and asymptotic index bound", criterion_10),
    ];
    let mut failed = Vec::new();
    for (id, title, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Outcome::new(false, "panicked"));
        let verdict = if outcome.passed { "PASS" } else { "FAIL" };
        println!(
            "{verdict} criterion {id:>2} [{title}] {} ({:.2}s)",
            outcome.summary,
            start.elapsed().as_secs_f64()
        );
        if !outcome.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: {} of 10 criteria fail: {failed:?}", failed.len());
        std::process::exit(1);
    }
}
