use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use num_bigint::BigUint;
use serde_json::json;

use lowerset::bounds::{
    asymptotic_count_bound, big_to_f64, conjugate, cor53_bound, cor54_bound, cor55_m_of_n, cor56_bound,
    count_upper_bound, dyadic_delta, tail_norm_with, tran_bound, EvalOptions,
};
use lowerset::construct::{build_lambda_n_with, build_lambda_with, delta_sequence_with, BuildOptions};
use lowerset::partitions::{sm_series, CountTable, DyadicCounts};
use lowerset::surrogate::{class_norm, extremal_instance_with, monte_carlo_error, DEFAULT_SEED};
use lowerset::table::{Cell, Format, Table};
use lowerset::verify::{format_power, published_power, run_suite, Suite, TABLE1_CARDINALITIES};
use lowerset::weights::{SequenceKind, TailRule, WeightSequence};
use lowerset::Error;

/// Largest `m` accepted by `counts`.
const MMAX_CAP: u32 = 2000;

#[derive(Parser, Debug)]
#[command(
    name = "lowerset",
    version,
    about = "Optimal lower sets, exact cardinalities and error bounds for anisotropic sequences rho",
    after_help = "Sequence specs: poly:s=<s> (rho_j = (j+1)^s), dyadic:s=<s> (rho_j = 2^{ks} on block I_k), \
                  custom:file=<path> (one rho_j per line, optional last line `tail poly:s=..` or `tail dyadic:s=..`; finite without it).\n\
                  Exit codes: 0 success, 1 verification failure or runtime error, 2 usage error."
)]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Write output to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Txt)]
    format: FormatArg,

    /// Maximum number of multiindices a construction may hold
    #[arg(long, global = true)]
    mem_cap: Option<usize>,

    /// Relative tolerance for certified infinite sums
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Seed for Monte Carlo sampling
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Txt,
    Csv,
    Json,
    Md,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Txt => Format::Txt,
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
            FormatArg::Md => Format::Md,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Which {
    Cor53,
    Cor54,
    Cor55,
    Cor56,
    Lemma52,
    Lemma42,
    Tran,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build Lambda(eps, rho) or the optimal n-term set Lambda_n
    Lambda {
        /// Sequence spec, e.g. dyadic:s=1
        #[arg(long)]
        rho: String,
        /// Threshold: all nu with rho^{-nu} >= eps
        #[arg(long, required_unless_present = "n", conflicts_with = "n")]
        eps: Option<f64>,
        /// Cardinality of the optimal set
        #[arg(long)]
        n: Option<usize>,
    },
    /// Print delta_1..delta_nmax for one or more sequences (figure data)
    Delta {
        /// Sequence spec; repeat for several columns
        #[arg(long, required = true)]
        rho: Vec<String>,
        #[arg(long)]
        nmax: usize,
    },
    /// Exact #Lambda(2^{-ms}, rho*(s)) with the 2^{-ms} columns
    Counts {
        /// Values of s for the 2^{-ms} columns
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        s: Vec<u32>,
        #[arg(long, default_value_t = 10)]
        mmax: u32,
        /// Compare rows m <= 10 with the published table
        #[arg(long)]
        check: bool,
    },
    /// Evaluate bounds next to the exact quantities they estimate
    Bounds {
        #[arg(long, default_value = "dyadic:s=1")]
        rho: String,
        /// Largest n for n-indexed bounds
        #[arg(long, default_value_t = 1000)]
        nmax: u64,
        /// Largest m for level-indexed bounds (lemma52, lemma42)
        #[arg(long, default_value_t = 10)]
        mmax: u32,
        #[arg(
            long,
            value_enum,
            value_delimiter = ',',
            default_value = "cor53,cor54,cor55,cor56,lemma52,lemma42"
        )]
        which: Vec<Which>,
        /// p for cor54 (a real >= 1 or `inf`)
        #[arg(long, value_parser = parse_p, default_value = "2")]
        p: f64,
        /// Number of leading coordinates of rho used by tran
        #[arg(long, default_value_t = 4)]
        d: u64,
        /// sigma for tran
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
    /// Build a worst-case member of the unit ball for Lambda_n
    Extremal {
        #[arg(long)]
        rho: String,
        /// p in [1, inf]; `inf` accepted
        #[arg(long, value_parser = parse_p)]
        p: f64,
        #[arg(long)]
        n: usize,
        /// Number of tail indices carrying coefficients
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        /// Monte Carlo samples for the sup-norm check (0 skips it)
        #[arg(long, default_value_t = 0)]
        samples: usize,
    },
    /// Run invariant suites; exits 1 on any violation
    Verify {
        /// domination, sandwich, bracket, oracle, table1 or all
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

fn parse_p(s: &str) -> Result<f64, String> {
    let p = match s {
        "inf" | "infinity" => f64::INFINITY,
        _ => s.parse::<f64>().map_err(|e| e.to_string())?,
    };
    if p >= 1.0 {
        Ok(p)
    } else {
        Err(format!("p must be >= 1, got {s}"))
    }
}

/// Failure of a subcommand, mapped to the exit-code contract.
enum Failure {
    Usage(String),
    Runtime(String),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::Parse(_)
            | Error::NotAdmissible(_)
            | Error::ZeroCoordinate(_)
            | Error::SequenceUndefined(_)
            | Error::BelowValidityThreshold { .. }
            | Error::TailDiverges(_)
            | Error::NotInLq(_)
            | Error::SeriesDiverges(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CmdResult = Result<String, Failure>;

struct Ctx {
    format: Format,
    build: BuildOptions,
    eval: EvalOptions,
    seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = cli.global;
    let mut build = BuildOptions::default();
    if let Some(cap) = g.mem_cap {
        if cap == 0 {
            return Err(Failure::Usage("--mem-cap must be positive".into()));
        }
        build.mem_cap = cap;
    }
    let mut eval = EvalOptions {
        build,
        ..EvalOptions::default()
    };
    if let Some(tol) = g.tol {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Failure::Usage(format!("--tol must lie in (0, 1), got {tol}")));
        }
        eval.rel_tol = tol;
    }
    let ctx = Ctx {
        format: g.format.into(),
        build,
        eval,
        seed: g.seed,
    };
    // verification failures still print their report before exiting
    let (text, verdict) = match cli.command {
        Command::Lambda { rho, eps, n } => (cmd_lambda(&ctx, &rho, eps, n)?, Ok(())),
        Command::Delta { rho, nmax } => (cmd_delta(&ctx, &rho, nmax)?, Ok(())),
        Command::Counts { s, mmax, check } => cmd_counts(&ctx, &s, mmax, check)?,
        Command::Bounds {
            rho,
            nmax,
            mmax,
            which,
            p,
            d,
            sigma,
        } => (cmd_bounds(&ctx, &rho, nmax, mmax, &which, p, d, sigma)?, Ok(())),
        Command::Extremal {
            rho,
            p,
            n,
            budget,
            samples,
        } => (cmd_extremal(&ctx, &rho, p, n, budget, samples)?, Ok(())),
        Command::Verify { suite } => cmd_verify(&ctx, &suite)?,
    };
    emit(g.out.as_ref(), &text)?;
    verdict
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Runtime(format!("stdout: {e}"))),
    }
}

fn parse_seq(spec: &str) -> Result<WeightSequence, Failure> {
    Ok(WeightSequence::parse_spec(spec)?)
}

fn dyadic_s(seq: &WeightSequence, what: &str) -> Result<f64, Failure> {
    match seq.kind() {
        SequenceKind::DyadicBlocks { s } => Ok(*s),
        _ => Err(Failure::Usage(format!(
            "{what} needs a dyadic:s=<s> sequence, got {seq}"
        ))),
    }
}

fn to_json_string(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn cmd_lambda(ctx: &Ctx, rho: &str, eps: Option<f64>, n: Option<usize>) -> CmdResult {
    let seq = parse_seq(rho)?;
    let lambda = match (eps, n) {
        (Some(eps), _) => build_lambda_with(&seq, eps, &ctx.build)?,
        (None, Some(n)) => build_lambda_n_with(&seq, n, &ctx.build)?.0,
        (None, None) => unreachable!("clap requires --eps or --n"),
    };
    info!("built {} indices for {seq}", lambda.len());
    if ctx.format == Format::Json {
        let indices: Vec<String> = lambda.members().iter().map(ToString::to_string).collect();
        return Ok(to_json_string(&json!({
            "rho": seq.label(),
            "eps": eps,
            "n": n,
            "cardinality": lambda.len(),
            "indices": indices,
        })));
    }
    let mut t = Table::new(["index", "rho_inv"]);
    for nu in lambda.members() {
        t.push(vec![Cell::Text(nu.to_string()), Cell::Float(seq.weight(nu)?.inverse())]);
    }
    Ok(t.render(ctx.format))
}

fn cmd_delta(ctx: &Ctx, specs: &[String], nmax: usize) -> CmdResult {
    let mut columns = vec!["n".to_string()];
    let mut values = Vec::new();
    for spec in specs {
        let seq = parse_seq(spec)?;
        let d = delta_sequence_with(&seq, nmax, &ctx.build)?;
        if d.horizon() < nmax {
            warn!("{seq} has only {} indices", d.horizon());
        }
        columns.push(seq.label().to_string());
        values.push(d);
    }
    let mut t = Table::new(columns);
    for n in 1..=nmax {
        let mut row = vec![Cell::int(n)];
        row.extend(values.iter().map(|d| d.get(n).map_or(Cell::Na, Cell::Float)));
        t.push(row);
    }
    Ok(t.render(ctx.format))
}

fn cmd_counts(ctx: &Ctx, s_values: &[u32], mmax: u32, check: bool) -> Result<(String, Result<(), Failure>), Failure> {
    if mmax > MMAX_CAP {
        return Err(Failure::Usage(format!("--mmax must be <= {MMAX_CAP}")));
    }
    if s_values.contains(&0) {
        return Err(Failure::Usage("--s values must be positive".into()));
    }
    let levels = sm_series(mmax);
    let mut cumulative = Vec::with_capacity(levels.len());
    let mut acc = BigUint::default();
    for l in &levels {
        acc += l;
        cumulative.push(acc.clone());
    }
    let mut columns = vec!["m".to_string(), "cardinality".to_string()];
    columns.extend(s_values.iter().map(|s| format!("s={s}")));
    let mut t = Table::new(columns);
    for (m, card) in cumulative.iter().enumerate() {
        let mut row = vec![Cell::int(m), Cell::int(card)];
        row.extend(s_values.iter().map(|&s| Cell::Sci((-f64::from(m as u32 * s)).exp2())));
        t.push(row);
    }
    let mut verdict = Ok(());
    if check {
        let upto = mmax.min(10);
        // the partition route is independent of the series route used above
        let table = CountTable::compute(upto);
        let mut bad = 0;
        for row in &table.rows {
            let m = row.m;
            let golden = BigUint::from(TABLE1_CARDINALITIES[m as usize]);
            let card = &cumulative[m as usize];
            let mut ok = *card == golden && row.cumulative == golden;
            for &s in s_values {
                if let Some(p) = published_power(m, s) {
                    ok &= format_power(m, s) == p;
                }
            }
            eprintln!(
                "{} m={m}: {card} (published {golden})",
                if ok { "PASS" } else { "FAIL" }
            );
            bad += usize::from(!ok);
        }
        if bad > 0 {
            verdict = Err(Failure::Verification);
        }
    }
    Ok((t.render(ctx.format), verdict))
}

/// `1, 2, 3, 4, 6, 8, 12, ...` up to `hi`, starting at `lo`, with `hi` itself.
fn geometric_grid(lo: u64, hi: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 1u64;
    while p <= hi {
        out.push(p);
        if p >= 2 && p + p / 2 <= hi {
            out.push(p + p / 2);
        }
        p *= 2;
    }
    out.push(hi);
    out.retain(|&n| n >= lo);
    out.sort_unstable();
    out.dedup();
    out
}

/// `2^16, 2^18, 2^20`, then further even powers of two up to `nmax`.
fn asymptotic_grid(nmax: u64) -> Vec<u64> {
    (16..=62u32)
        .step_by(2)
        .map(|e| 1u64 << e)
        .filter(|&n| n <= (1 << 20) || n <= nmax)
        .collect()
}

fn bound_row(n: u64, exact: Option<f64>, name: &str, bound: f64, dominated: Option<bool>) -> Vec<Cell> {
    vec![
        Cell::int(n),
        exact.map_or(Cell::Na, Cell::Float),
        Cell::Text(name.into()),
        Cell::Float(bound),
        dominated.map_or(Cell::Na, Cell::Bool),
    ]
}

#[allow(clippy::too_many_arguments)]
fn cmd_bounds(ctx: &Ctx, rho: &str, nmax: u64, mmax: u32, which: &[Which], p: f64, d: u64, sigma: f64) -> CmdResult {
    let seq = parse_seq(rho)?;
    let mut t = Table::new(["n", "exact_delta_n", "bound_name", "bound_value", "dominated"]);
    let mut counts = DyadicCounts::new();
    for w in which {
        match w {
            Which::Cor53 => {
                let s = dyadic_s(&seq, "cor53")?;
                for n in 2..=nmax {
                    let b = cor53_bound(s, n)?;
                    let e = dyadic_delta(&mut counts, s, n);
                    t.push(bound_row(n, Some(e), "cor53", b, Some(b >= e)));
                }
            }
            Which::Cor54 => {
                let s = dyadic_s(&seq, "cor54")?;
                let q = conjugate(p)?;
                for n in geometric_grid(2, nmax) {
                    let b = cor54_bound(s, p, n)?;
                    let e = tail_norm_with(&seq, n as usize, q, &ctx.eval)?.value;
                    t.push(bound_row(n, Some(e.value), "cor54", b, Some(b >= e.upper())));
                }
            }
            Which::Cor55 => {
                let s = dyadic_s(&seq, "cor55")?;
                for n in asymptotic_grid(nmax) {
                    let b = (-f64::from(cor55_m_of_n(n)?) * s).exp2();
                    let e = dyadic_delta(&mut counts, s, n);
                    t.push(bound_row(n, Some(e), "cor55", b, Some(b >= e)));
                }
            }
            Which::Cor56 => {
                // the row is indexed by the position at which the bound applies
                let s = dyadic_s(&seq, "cor56")?;
                for n in asymptotic_grid(nmax) {
                    let (index, b) = cor56_bound(s, n)?;
                    let e = dyadic_delta(&mut counts, s, index);
                    t.push(bound_row(index, Some(e), "cor56", b, Some(b >= e)));
                }
            }
            Which::Lemma52 => {
                for m in 0..=mmax {
                    let b = asymptotic_count_bound(m);
                    let e = big_to_f64(counts.cumulative(m));
                    let m64 = u64::from(m);
                    t.push(bound_row(m64, Some(e), "lemma52", b.combined, Some(b.combined >= e)));
                    if m >= 1 {
                        t.push(bound_row(m64, Some(e), "lemma52_i", b.first, Some(b.first >= e)));
                        t.push(bound_row(m64, Some(e), "lemma52_ii", b.second, Some(b.second >= e)));
                    }
                }
            }
            Which::Lemma42 => {
                for m in 1..=mmax {
                    let eps = (-f64::from(m)).exp2();
                    let b = count_upper_bound(&seq, eps)?;
                    let e = build_lambda_with(&seq, eps, &ctx.build)?.len() as f64;
                    t.push(bound_row(u64::from(m), Some(e), "lemma42", b, Some(b >= e)));
                }
            }
            Which::Tran => {
                if d == 0 {
                    return Err(Failure::Usage("--d must be positive".into()));
                }
                let prefix = (1..=d).map(|j| seq.rho_j(j)).collect::<Result<Vec<_>, _>>()?;
                let finite = WeightSequence::custom(prefix.clone(), TailRule::Finite)?;
                for n in geometric_grid(1, nmax) {
                    let b = tran_bound(&prefix, sigma, n)?;
                    let e = tail_norm_with(&finite, n as usize, 1.0, &ctx.eval)?.value.value;
                    t.push(bound_row(n, Some(e), "tran", b, None));
                }
            }
        }
    }
    Ok(t.render(ctx.format))
}

fn cmd_extremal(ctx: &Ctx, rho: &str, p: f64, n: usize, budget: usize, samples: usize) -> CmdResult {
    let seq = parse_seq(rho)?;
    let inst = extremal_instance_with(&seq, p, n, budget, &ctx.eval)?;
    let norm = class_norm(&inst.function, &seq, p)?;
    let mc = if samples > 0 {
        Some(monte_carlo_error(&inst.function, &inst.lambda, samples, ctx.seed)?)
    } else {
        None
    };
    let inf_str = |v: f64| if v.is_infinite() { json!("inf") } else { json!(v) };
    let coeffs: Vec<(String, f64)> = inst.function.coeffs().map(|(nu, c)| (nu.to_string(), c)).collect();
    if ctx.format == Format::Json {
        let pairs: Vec<_> = coeffs
            .iter()
            .map(|(nu, c)| json!({"index": nu, "coefficient": c}))
            .collect();
        return Ok(to_json_string(&json!({
            "rho": seq.label(),
            "p": inf_str(p),
            "q": inf_str(inst.q),
            "n": n,
            "budget": budget,
            "coefficients": pairs,
            "class_norm": norm,
            "surrogate_error": inst.surrogate_error,
            "delta_nq": inst.class_error.value.value,
            "delta_nq_error": inst.class_error.value.error,
            "truncation_remainder": inst.truncation_remainder.value.value,
            "truncation_bound": inst.truncation_bound(),
            "within_remainder": inst.within_remainder(),
            "monte_carlo": mc,
        })));
    }
    let mut out = String::new();
    if ctx.format == Format::Txt {
        out.push_str(&format!(
            "# rho {} p {p} q {} n {n} budget {budget}\n# class_norm {norm}\n# surrogate_error {}\n\
             # delta_nq {} +- {:e}\n# truncation_remainder {}\n# truncation_bound {:e}\n",
            seq.label(),
            inst.q,
            inst.surrogate_error,
            inst.class_error.value.value,
            inst.class_error.value.error,
            inst.truncation_remainder.value.value,
            inst.truncation_bound(),
        ));
        if let Some(mc) = &mc {
            out.push_str(&format!(
                "# monte_carlo seed {} samples {} sup_error {}\n",
                mc.seed, mc.samples, mc.sup_error
            ));
        }
    }
    let mut t = Table::new(["index", "coefficient"]);
    for (nu, c) in coeffs {
        t.push(vec![Cell::Text(nu), Cell::Float(c)]);
    }
    out.push_str(&t.render(ctx.format));
    Ok(out)
}

fn cmd_verify(ctx: &Ctx, suite: &str) -> Result<(String, Result<(), Failure>), Failure> {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![suite.parse::<Suite>()?]
    };
    let mut reports = Vec::new();
    for s in suites {
        reports.push(run_suite(s)?);
    }
    let ok = reports.iter().all(|r| r.passed());
    let text = if ctx.format == Format::Json {
        to_json_string(&serde_json::to_value(&reports).expect("reports serialize"))
    } else {
        let mut t = Table::new(["suite", "check", "result", "detail"]);
        for r in &reports {
            for c in &r.checks {
                t.push(vec![
                    Cell::Text(r.suite.to_string()),
                    Cell::Text(c.name.clone()),
                    Cell::Text(if c.passed { "PASS" } else { "FAIL" }.into()),
                    Cell::Text(c.detail.clone()),
                ]);
            }
        }
        t.render(ctx.format)
    };
    Ok((text, if ok { Ok(()) } else { Err(Failure::Verification) }))
}
