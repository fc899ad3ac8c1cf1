//! Command-line front end: problem files in, JSON reports out, plus
//! one-shot subcommands printing canonical text. Reports are
//! deterministic: the same problem file and seed yield byte-identical
//! output; wall-clock timing goes to standard error only.

use crate::chain::{build_chain, linearize, ChainParams, LinearODE};
use crate::exec::Parallelism;
use crate::expr::{
    fmt_rat, normalize, parse, sub, symbolic_eq, symbolic_ratio, Expr, Rat, SymbolTable,
};
use crate::numverify::{
    identity_suite, ratio_schwarzian, riccati_residual, IdentityReport, NumericSettings,
};
use crate::reduce::depress;
use crate::refforms;
use crate::schwarz::{schwarzian_at, sl_schwarzian, ExprFn};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

/// Default tolerance for numeric checks driven by `run` and `verify`.
pub const DEFAULT_TOL: f64 = 1e-4;
/// Relative tolerance the identity suite's spot checks must meet.
pub const IDENT_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "riccati-schwarz",
    version,
    about = "Riccati-chain linearization, depressed forms, and Schwarzian cross checks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the checks requested by a problem file and emit a JSON report.
    Run {
        /// Problem file (JSON).
        #[arg(long)]
        spec: PathBuf,
        /// Seed for random instantiation of opaque coefficients.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report destination (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the problem file's integration step.
        #[arg(long)]
        step: Option<f64>,
        /// Override the integration interval, as A:B.
        #[arg(long)]
        interval: Option<String>,
        /// Tolerance for numeric checks.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Print the order-n chain equation.
    Chain {
        #[arg(short)]
        n: usize,
        /// Shift constant, an integer or ratio like 2/3.
        #[arg(short, default_value = "1")]
        c: String,
        /// Coefficient a_i as an expression; repeat n+1 times. Omit for
        /// opaque symbols a0..an.
        #[arg(long = "alpha")]
        alphas: Vec<String>,
    },
    /// Print the linear equation the order-n chain maps to.
    Linearize {
        #[arg(short)]
        n: usize,
        #[arg(short, default_value = "1")]
        c: String,
        #[arg(long = "alpha")]
        alphas: Vec<String>,
    },
    /// Remove the subleading coefficient of a monic linear equation and
    /// print the gauge plus the depressed coefficients.
    Depress {
        /// Depress the linearized chain equation of this order (chain
        /// order = this minus one) with opaque coefficients.
        #[arg(long)]
        order: Option<usize>,
        /// Accepted alongside --order for clarity; opaque coefficients
        /// are the default there.
        #[arg(long)]
        opaque: bool,
        /// Coefficient of u^(k), lowest k first; repeat to set the order.
        /// Alternative to --order.
        #[arg(long = "coeff")]
        coeffs: Vec<String>,
        #[arg(short, default_value = "1")]
        c: String,
    },
    /// Print the Schwarzian derivative of a closed-form expression at
    /// points (--at) or sampled over an interval as plot columns.
    Schwarzian {
        expr: String,
        /// Comma-separated evaluation points.
        #[arg(long)]
        at: Option<String>,
        /// Sampling interval, as A:B.
        #[arg(long, default_value = "0:1")]
        interval: String,
        #[arg(long, default_value_t = 1e-2)]
        step: f64,
    },
    /// Numeric round trip for one chain: integrate the linearized
    /// equation and check the chain residual (and, at order 1, the
    /// solution-ratio Schwarzian).
    Verify {
        #[arg(short)]
        n: usize,
        #[arg(short, default_value = "1")]
        c: String,
        #[arg(long = "alpha")]
        alphas: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value = "0:1")]
        interval: String,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
}

/// Entry point used by the binary. Clap usage errors, unreadable or
/// invalid inputs exit 2; failed checks exit 1.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, String> {
    match cli.cmd {
        Cmd::Run { spec, seed, out, step, interval, tol } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| format!("cannot read {}: {e}", spec.display()))?;
            let file: SpecFile =
                serde_json::from_str(&text).map_err(|e| format!("invalid problem file: {e}"))?;
            let mut cfg = file.resolve(seed)?;
            if let Some(h) = step {
                ensure_pos(h, "step")?;
                cfg.num.step = h;
            }
            if let Some(iv) = interval {
                let (a, b) = parse_interval(&iv)?;
                cfg.num.x0 = a;
                cfg.num.length = b - a;
            }
            if let Some(t) = tol {
                ensure_pos(t, "tol")?;
                cfg.tol = t;
            }
            let started = std::time::Instant::now();
            let (report, all_pass) = run_checks(&cfg);
            let mut body =
                serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
            body.push('\n');
            match out {
                Some(path) => std::fs::write(&path, body)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
                None => print!("{body}"),
            }
            eprintln!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
            Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Chain { n, c, alphas } => {
            let params = make_params(n, &c, &alphas)?;
            println!("{}", build_chain(&params));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Linearize { n, c, alphas } => {
            let params = make_params(n, &c, &alphas)?;
            println!("{}", linearize(&params));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Depress { order, opaque: _, coeffs, c } => {
            let ode = match (order, coeffs.is_empty()) {
                (Some(_), false) => {
                    return Err("--order and --coeff are mutually exclusive".into())
                }
                (None, true) => return Err("one of --order or --coeff is required".into()),
                (Some(m), true) => {
                    if m < 2 {
                        return Err(format!("--order must be at least 2, got {m}"));
                    }
                    let params = make_params(m - 1, &c, &[])?;
                    linearize(&params)
                }
                (None, false) => {
                    let parsed = coeffs
                        .iter()
                        .map(|s| parse_expr_arg(s))
                        .collect::<Result<Vec<_>, _>>()?;
                    LinearODE::new(parsed).map_err(|e| e.to_string())?
                }
            };
            let red = depress(&ode).map_err(|e| e.to_string())?;
            println!("gauge: {}", red.gauge());
            println!("{}", red.reduced());
            for k in (0..ode.order() - 1).rev() {
                println!("b{k}: {}", normalize(red.reduced().coeff(k)));
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Schwarzian { expr, at, interval, step } => {
            let f = parse_expr_arg(&expr)?;
            if !f.symbols().is_empty() {
                return Err("the expression must be closed (no coefficient symbols)".into());
            }
            let table = SymbolTable::new();
            let func = ExprFn::new(&f, &table);
            let points = match at {
                Some(list) => list
                    .split(',')
                    .map(|t| {
                        f64::from_str(t.trim()).map_err(|_| format!("bad point {t:?} in --at"))
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                None => {
                    let (a, b) = parse_interval(&interval)?;
                    ensure_pos(step, "step")?;
                    let count = ((b - a) / step).round() as usize;
                    (0..=count).map(|i| a + step * i as f64).collect()
                }
            };
            for x in points {
                let s = schwarzian_at(&func, x).map_err(|e| e.to_string())?;
                println!("{x} {s}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { n, c, alphas, seed, step, interval, tol } => {
            let params = make_params(n, &c, &alphas)?;
            ensure_pos(step, "step")?;
            ensure_pos(tol, "tol")?;
            let (a, b) = parse_interval(&interval)?;
            let num = NumericSettings { x0: a, init: None, length: b - a, step };
            let table = instantiation(&params, seed);
            let mut ok = true;

            match riccati_residual(&params, &table, &num, Parallelism::default()) {
                Ok(rep) => {
                    let pass = rep.max_residual < tol;
                    ok &= pass;
                    println!(
                        "round trip: max residual {:e} over {} nodes (tol {:e}): {}",
                        rep.max_residual,
                        rep.nodes_checked,
                        tol,
                        verdict(pass)
                    );
                }
                Err(e) => {
                    ok = false;
                    println!("round trip: error: {e}");
                }
            }
            if n == 1 {
                let lin = linearize(&params);
                let p = table.substitute_into(lin.coeff(1));
                let q = table.substitute_into(lin.coeff(0));
                match ratio_schwarzian(&p, &q, a, b - a, step, Parallelism::default()) {
                    Ok(rep) => {
                        let pass = rep.max_deviation < tol;
                        ok &= pass;
                        println!(
                            "solution ratio: max Schwarzian deviation {:e} over {} nodes (tol {:e}): {}",
                            rep.max_deviation,
                            rep.nodes_checked,
                            tol,
                            verdict(pass)
                        );
                    }
                    Err(e) => {
                        ok = false;
                        println!("solution ratio: error: {e}");
                    }
                }
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

fn ensure_pos(v: f64, what: &str) -> Result<(), String> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(format!("{what} must be positive and finite, got {v}"))
    }
}

fn parse_rat(s: &str) -> Result<Rat, String> {
    Rat::from_str(s.trim()).map_err(|_| format!("bad rational {s:?}"))
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("bad interval {s:?}, expected A:B"))?;
    let a = f64::from_str(a.trim()).map_err(|_| format!("bad interval start {a:?}"))?;
    let b = f64::from_str(b.trim()).map_err(|_| format!("bad interval end {b:?}"))?;
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(format!("interval must satisfy A < B, got {a}:{b}"));
    }
    Ok((a, b))
}

fn parse_expr_arg(s: &str) -> Result<Expr, String> {
    parse(s).map_err(|e| format!("in expression {s:?}: {e}"))
}

fn make_params(n: usize, c: &str, alphas: &[String]) -> Result<ChainParams, String> {
    let c = parse_rat(c)?;
    if alphas.is_empty() {
        ChainParams::opaque(n, c).map_err(|e| e.to_string())
    } else {
        let parsed = alphas
            .iter()
            .map(|s| parse_expr_arg(s))
            .collect::<Result<Vec<_>, _>>()?;
        ChainParams::new(n, c, parsed).map_err(|e| e.to_string())
    }
}

/// Closed-form stand-ins (random cubics) for every symbol appearing in
/// the coefficients, drawn deterministically from the seed.
fn instantiation(params: &ChainParams, seed: u64) -> SymbolTable {
    let mut names = BTreeSet::new();
    for a in params.alphas() {
        names.extend(a.symbols().into_keys());
    }
    if names.is_empty() {
        return SymbolTable::new();
    }
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(10);
    SymbolTable::random(&refs, 3, &mut rng)
}

// ---------------------------------------------------------------------
// Problem files and reports

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    n: usize,
    c: Option<CVal>,
    alphas: Option<AlphasVal>,
    numeric: Option<NumericVal>,
    checks: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CVal {
    Int(i64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AlphasVal {
    Mode(String),
    List(Vec<String>),
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct NumericVal {
    x0: Option<f64>,
    interval: Option<[f64; 2]>,
    step: Option<f64>,
    init: Option<Vec<f64>>,
}

#[derive(Debug)]
struct RunConfig {
    params: ChainParams,
    opaque: bool,
    num: NumericSettings,
    tol: f64,
    checks: Vec<Check>,
    seed: u64,
}

impl SpecFile {
    fn resolve(self, seed: u64) -> Result<RunConfig, String> {
        let c = match self.c {
            None => Rat::from_integer(1.into()),
            Some(CVal::Int(i)) => Rat::from_integer(i.into()),
            Some(CVal::Text(s)) => parse_rat(&s)?,
        };
        let (params, opaque) = match self.alphas {
            None => (ChainParams::opaque(self.n, c).map_err(|e| e.to_string())?, true),
            Some(AlphasVal::Mode(s)) if s == "opaque" => {
                (ChainParams::opaque(self.n, c).map_err(|e| e.to_string())?, true)
            }
            Some(AlphasVal::Mode(s)) => {
                return Err(format!("alphas must be \"opaque\" or a list, got {s:?}"))
            }
            Some(AlphasVal::List(items)) => {
                let parsed = items
                    .iter()
                    .map(|s| parse_expr_arg(s))
                    .collect::<Result<Vec<_>, _>>()?;
                (ChainParams::new(self.n, c, parsed).map_err(|e| e.to_string())?, false)
            }
        };

        let nv = self.numeric.unwrap_or_default();
        let mut num = NumericSettings::default();
        if let Some([a, b]) = nv.interval {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(format!("interval must satisfy A < B, got [{a}, {b}]"));
            }
            if let Some(x0) = nv.x0 {
                if x0 != a {
                    return Err(format!("x0 = {x0} conflicts with interval start {a}"));
                }
            }
            num.x0 = a;
            num.length = b - a;
        } else if let Some(x0) = nv.x0 {
            if !x0.is_finite() {
                return Err(format!("x0 must be finite, got {x0}"));
            }
            num.x0 = x0;
        }
        if let Some(h) = nv.step {
            ensure_pos(h, "step")?;
            num.step = h;
        }
        if let Some(init) = nv.init {
            if init.len() != params.n() + 1 {
                return Err(format!(
                    "init needs {} values for chain order {}, got {}",
                    params.n() + 1,
                    params.n(),
                    init.len()
                ));
            }
            if init.iter().any(|v| !v.is_finite()) {
                return Err("init values must be finite".into());
            }
            num.init = Some(init);
        }

        let checks = match self.checks {
            Some(names) => {
                let mut list = Vec::new();
                for name in &names {
                    let check = Check::from_name(name)
                        .ok_or_else(|| format!("unknown check {name:?}"))?;
                    if check == Check::Ratio && params.n() != 1 {
                        return Err(format!(
                            "check \"ratio\" applies to chain order 1 only, problem has order {}",
                            params.n()
                        ));
                    }
                    if !list.contains(&check) {
                        list.push(check);
                    }
                }
                list
            }
            None => Check::ALL
                .into_iter()
                .filter(|ch| *ch != Check::Ratio || params.n() == 1)
                .collect(),
        };

        Ok(RunConfig { params, opaque, num, tol: DEFAULT_TOL, checks, seed })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Check {
    Chain,
    Linearize,
    Depress,
    Roundtrip,
    Ratio,
    Identities,
    Halving,
}

impl Check {
    const ALL: [Check; 7] = [
        Check::Chain,
        Check::Linearize,
        Check::Depress,
        Check::Roundtrip,
        Check::Ratio,
        Check::Identities,
        Check::Halving,
    ];

    fn name(self) -> &'static str {
        match self {
            Check::Chain => "chain",
            Check::Linearize => "linearize",
            Check::Depress => "depress",
            Check::Roundtrip => "roundtrip",
            Check::Ratio => "ratio",
            Check::Identities => "identities",
            Check::Halving => "halving",
        }
    }

    fn from_name(name: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Serialize)]
struct Report {
    version: &'static str,
    input: InputEcho,
    checks: Vec<CheckResult>,
    identities: Vec<IdentityReport>,
}

#[derive(Serialize)]
struct InputEcho {
    n: usize,
    c: String,
    alphas: Vec<String>,
    opaque: bool,
    x0: f64,
    length: f64,
    step: f64,
    init: Option<Vec<f64>>,
    tol: f64,
    checks: Vec<String>,
    seed: u64,
}

#[derive(Serialize)]
struct CheckResult {
    name: &'static str,
    pass: bool,
    details: BTreeMap<&'static str, String>,
}

fn run_checks(cfg: &RunConfig) -> (Report, bool) {
    let mut checks = Vec::new();
    let mut identities = Vec::new();
    for check in &cfg.checks {
        let result = match check {
            Check::Chain => check_chain(cfg),
            Check::Linearize => check_linearize(cfg),
            Check::Depress => check_depress(cfg),
            Check::Roundtrip => check_roundtrip(cfg),
            Check::Ratio => check_ratio(cfg),
            Check::Identities => check_identities(cfg, &mut identities),
            Check::Halving => check_halving(),
        };
        checks.push(result);
    }
    let all_pass = checks.iter().all(|c| c.pass);
    let report = Report {
        version: env!("CARGO_PKG_VERSION"),
        input: InputEcho {
            n: cfg.params.n(),
            c: fmt_rat(cfg.params.c()),
            alphas: cfg.params.alphas().iter().map(|a| a.to_string()).collect(),
            opaque: cfg.opaque,
            x0: cfg.num.x0,
            length: cfg.num.length,
            step: cfg.num.step,
            init: cfg.num.init.clone(),
            tol: cfg.tol,
            checks: cfg.checks.iter().map(|c| c.name().to_string()).collect(),
            seed: cfg.seed,
        },
        checks,
        identities,
    };
    (report, all_pass)
}

fn check_chain(cfg: &RunConfig) -> CheckResult {
    let eq = build_chain(&cfg.params);
    let mut details = BTreeMap::new();
    details.insert("equation", eq.to_string());
    let mut pass = true;
    if cfg.opaque && cfg.params.n() == 2 {
        let printed = refforms::chain2_printed(cfg.params.c());
        let diff = refforms::term_diff(eq.lhs(), &printed);
        details.insert(
            "printed_diff",
            diff.iter()
                .map(|(mono, delta)| format!("{mono}: {delta}"))
                .collect::<Vec<_>>()
                .join("; "),
        );
        let corrected = refforms::chain2_corrected(cfg.params.c());
        pass = refforms::term_diff(eq.lhs(), &corrected).is_empty() && !diff.is_empty();
    } else if cfg.opaque && cfg.params.n() == 3 {
        let printed = refforms::chain3_printed(cfg.params.c());
        pass = refforms::term_diff(eq.lhs(), &printed).is_empty();
        details.insert("printed_match", if pass { "exact" } else { "differs" }.into());
    }
    CheckResult { name: Check::Chain.name(), pass, details }
}

fn check_linearize(cfg: &RunConfig) -> CheckResult {
    let lin = linearize(&cfg.params);
    let mut details = BTreeMap::new();
    details.insert("equation", lin.to_string());
    let mut pass = true;
    if cfg.opaque && (cfg.params.n() == 2 || cfg.params.n() == 3) {
        let printed = if cfg.params.n() == 2 {
            refforms::linear3_printed(cfg.params.c())
        } else {
            refforms::linear4_printed(cfg.params.c())
        };
        pass = lin.order() == printed.order()
            && lin
                .coeffs()
                .iter()
                .zip(printed.coeffs())
                .all(|(a, b)| symbolic_eq(a, b));
        details.insert("printed_match", if pass { "exact" } else { "differs" }.into());
    }
    CheckResult { name: Check::Linearize.name(), pass, details }
}

fn check_depress(cfg: &RunConfig) -> CheckResult {
    let lin = linearize(&cfg.params);
    let mut details = BTreeMap::new();
    let red = match depress(&lin) {
        Ok(red) => red,
        Err(e) => {
            details.insert("error", e.to_string());
            return CheckResult { name: Check::Depress.name(), pass: false, details };
        }
    };
    details.insert("gauge", red.gauge().to_string());
    let order = lin.order();
    for k in 0..order {
        // Coefficient keys b0..b{order-1}; the subleading one must be 0.
        let key: &'static str = match k {
            0 => "b0",
            1 => "b1",
            2 => "b2",
            3 => "b3",
            4 => "b4",
            5 => "b5",
            6 => "b6",
            _ => "b7",
        };
        details.insert(key, normalize(red.reduced().coeff(k)).to_string());
    }
    let mut pass = red.reduced().coeff(order - 1).is_zero();
    if cfg.opaque && cfg.params.n() == 2 {
        let [printed_b0, printed_b1] = refforms::depressed3_printed(cfg.params.c());
        let derived_b0 = refforms::depressed3_derived_b0(cfg.params.c());
        pass &= symbolic_eq(red.reduced().coeff(0), &derived_b0)
            && symbolic_eq(red.reduced().coeff(1), &printed_b1);
        let deviation = normalize(&sub(derived_b0, printed_b0));
        pass &= !deviation.is_zero();
        details.insert("printed_b0_deviation", deviation.to_string());
    } else if cfg.opaque && cfg.params.n() == 3 {
        let printed = refforms::depressed4_printed(cfg.params.c());
        pass &= printed
            .iter()
            .enumerate()
            .all(|(k, b)| symbolic_eq(red.reduced().coeff(k), b));
        details.insert("printed_match", if pass { "exact" } else { "differs" }.into());
    }
    CheckResult { name: Check::Depress.name(), pass, details }
}

fn check_roundtrip(cfg: &RunConfig) -> CheckResult {
    let table = instantiation(&cfg.params, cfg.seed);
    let mut details = BTreeMap::new();
    if !table.is_empty() {
        details.insert("instantiation", table.to_string());
    }
    match riccati_residual(&cfg.params, &table, &cfg.num, Parallelism::default()) {
        Ok(rep) => {
            let pass = rep.max_residual < cfg.tol;
            details.insert("max_residual", format!("{:e}", rep.max_residual));
            details.insert("worst_x", format!("{}", rep.worst_x));
            details.insert("nodes_checked", rep.nodes_checked.to_string());
            details.insert("nodes_masked", rep.nodes_masked.to_string());
            details.insert("tol", format!("{:e}", cfg.tol));
            CheckResult { name: Check::Roundtrip.name(), pass, details }
        }
        Err(e) => {
            details.insert("error", e.to_string());
            CheckResult { name: Check::Roundtrip.name(), pass: false, details }
        }
    }
}

fn check_ratio(cfg: &RunConfig) -> CheckResult {
    let table = instantiation(&cfg.params, cfg.seed);
    let lin = linearize(&cfg.params);
    let p = table.substitute_into(lin.coeff(1));
    let q = table.substitute_into(lin.coeff(0));
    let mut details = BTreeMap::new();
    details.insert("p", p.to_string());
    details.insert("q", q.to_string());
    details.insert("target", sl_schwarzian(&p, &q).to_string());
    match ratio_schwarzian(&p, &q, cfg.num.x0, cfg.num.length, cfg.num.step, Parallelism::default())
    {
        Ok(rep) => {
            let pass = rep.max_deviation < cfg.tol;
            details.insert("max_deviation", format!("{:e}", rep.max_deviation));
            details.insert("nodes_checked", rep.nodes_checked.to_string());
            details.insert("nodes_masked", rep.nodes_masked.to_string());
            if let Some(end) = rep.trimmed_end {
                details.insert("trimmed_end", format!("{end}"));
            }
            details.insert("tol", format!("{:e}", cfg.tol));
            CheckResult { name: Check::Ratio.name(), pass, details }
        }
        Err(e) => {
            details.insert("error", e.to_string());
            CheckResult { name: Check::Ratio.name(), pass: false, details }
        }
    }
}

/// Expected exact constants for the identity suite, keyed by report name.
const EXPECTED_CONSTANTS: [(&str, &str); 4] = [
    ("chain2-coefficient-b1", "3/2"),
    ("chain2-constrained-combination", "-1/3"),
    ("chain3-coefficient-b2", "3"),
    ("chain3-constrained-combination", "1/2"),
];

fn check_identities(cfg: &RunConfig, out: &mut Vec<IdentityReport>) -> CheckResult {
    let mut details = BTreeMap::new();
    match identity_suite(cfg.seed, Parallelism::default()) {
        Ok(reports) => {
            let mut pass = reports.len() == EXPECTED_CONSTANTS.len();
            for (report, (name, expected)) in reports.iter().zip(EXPECTED_CONSTANTS) {
                let ok = report.name == name
                    && report.constant.as_deref() == Some(expected)
                    && report.spot_check.max_rel_dev < IDENT_TOL;
                pass &= ok;
            }
            details.insert(
                "constants",
                reports
                    .iter()
                    .map(|r| {
                        format!("{}: {}", r.name, r.constant.as_deref().unwrap_or("none"))
                    })
                    .collect::<Vec<_>>()
                    .join("; "),
            );
            details.insert(
                "max_rel_dev",
                format!(
                    "{:e}",
                    reports
                        .iter()
                        .map(|r| r.spot_check.max_rel_dev)
                        .fold(0.0, f64::max)
                ),
            );
            *out = reports;
            CheckResult { name: Check::Identities.name(), pass, details }
        }
        Err(e) => {
            details.insert("error", e.to_string());
            CheckResult { name: Check::Identities.name(), pass: false, details }
        }
    }
}

fn check_halving() -> CheckResult {
    let ode = LinearODE::new(vec![Expr::sym("q"), Expr::sym("p")]).expect("order 2");
    let mut details = BTreeMap::new();
    let red = match depress(&ode) {
        Ok(red) => red,
        Err(e) => {
            details.insert("error", e.to_string());
            return CheckResult { name: Check::Halving.name(), pass: false, details };
        }
    };
    let target = sl_schwarzian(&Expr::sym("p"), &Expr::sym("q"));
    let ratio = symbolic_ratio(red.reduced().coeff(0), &target);
    details.insert("coefficient", normalize(red.reduced().coeff(0)).to_string());
    details.insert("target", target.to_string());
    details.insert(
        "constant",
        ratio.as_ref().map(fmt_rat).unwrap_or_else(|| "none".into()),
    );
    let pass = ratio == Some(crate::expr::rat(1, 2));
    CheckResult { name: Check::Halving.name(), pass, details }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(json: &str, seed: u64) -> Result<RunConfig, String> {
        let file: SpecFile = serde_json::from_str(json).map_err(|e| e.to_string())?;
        file.resolve(seed)
    }

    #[test]
    fn parses_rationals_and_intervals() {
        assert_eq!(parse_rat("2/3").unwrap(), crate::expr::rat(2, 3));
        assert_eq!(parse_rat(" -5 ").unwrap(), crate::expr::rat_int(-5));
        assert!(parse_rat("x").is_err());
        assert_eq!(parse_interval("0:1.5").unwrap(), (0.0, 1.5));
        assert!(parse_interval("1:1").is_err());
        assert!(parse_interval("nope").is_err());
    }

    #[test]
    fn resolves_a_full_problem_file() {
        let cfg = resolve(
            r#"{
                "n": 2,
                "c": "1/2",
                "alphas": ["x", "1", "x^2"],
                "numeric": {"interval": [0.0, 2.0], "step": 0.01, "init": [1.0, 0.0, 1.0]},
                "checks": ["chain", "depress"]
            }"#,
            7,
        )
        .unwrap();
        assert_eq!(cfg.params.n(), 2);
        assert_eq!(cfg.params.c(), &crate::expr::rat(1, 2));
        assert!(!cfg.opaque);
        assert_eq!(cfg.num.x0, 0.0);
        assert_eq!(cfg.num.length, 2.0);
        assert_eq!(cfg.num.init.as_deref(), Some(&[1.0, 0.0, 1.0][..]));
        assert_eq!(cfg.checks, vec![Check::Chain, Check::Depress]);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn defaults_fill_in_and_ratio_is_gated() {
        let cfg = resolve(r#"{"n": 1}"#, 0).unwrap();
        assert!(cfg.opaque);
        assert_eq!(cfg.num.step, 1e-3);
        assert!(cfg.checks.contains(&Check::Ratio));

        let cfg = resolve(r#"{"n": 2}"#, 0).unwrap();
        assert!(!cfg.checks.contains(&Check::Ratio));

        let err = resolve(r#"{"n": 2, "checks": ["ratio"]}"#, 0).unwrap_err();
        assert!(err.contains("order 1"), "{err}");
    }

    #[test]
    fn rejects_bad_problem_files() {
        assert!(resolve(r#"{"n": 0}"#, 0).unwrap_err().contains("order"));
        assert!(resolve(r#"{"n": 1, "alphas": ["x"]}"#, 0).unwrap_err().contains("2"));
        assert!(resolve(r#"{"n": 1, "checks": ["bogus"]}"#, 0)
            .unwrap_err()
            .contains("unknown check"));
        assert!(resolve(r#"{"n": 1, "numeric": {"step": -1.0}}"#, 0)
            .unwrap_err()
            .contains("step"));
        assert!(resolve(r#"{"n": 1, "numeric": {"x0": 1.0, "interval": [0.0, 1.0]}}"#, 0)
            .unwrap_err()
            .contains("conflicts"));
        assert!(resolve(r#"{"n": 1, "numeric": {"init": [1.0]}}"#, 0)
            .unwrap_err()
            .contains("init"));
    }

    #[test]
    fn symbolic_checks_pass_for_the_opaque_chains() {
        for n in [2usize, 3] {
            let cfg = resolve(&format!(r#"{{"n": {n}, "checks": ["chain", "linearize", "depress", "halving"]}}"#), 0)
                .unwrap();
            let (report, all_pass) = run_checks(&cfg);
            assert!(all_pass, "n = {n}: {:?}", report.checks.iter().map(|c| (c.name, c.pass, c.details.clone())).collect::<Vec<_>>());
        }
    }

    #[test]
    fn identity_check_judges_constants() {
        let cfg = resolve(r#"{"n": 2, "checks": ["identities"]}"#, 3).unwrap();
        let (report, all_pass) = run_checks(&cfg);
        assert!(all_pass);
        assert_eq!(report.identities.len(), 4);
        assert_eq!(report.checks.len(), 1);
        assert!(report.checks[0].details["constants"].contains("chain2-coefficient-b1: 3/2"));
    }

    #[test]
    fn reports_serialize_deterministically() {
        let cfg = resolve(r#"{"n": 1, "checks": ["chain", "halving"]}"#, 0).unwrap();
        let (a, _) = run_checks(&cfg);
        let (b, _) = run_checks(&cfg);
        assert_eq!(
            serde_json::to_string_pretty(&a).unwrap(),
            serde_json::to_string_pretty(&b).unwrap()
        );
    }
}
