//! Floating-point evaluation.
//!
//! Symbols are resolved through a [`SymbolTable`]; `Int` nodes integrate
//! their argument from a fixed base point to the evaluation point by
//! composite Simpson quadrature. Both the base point and the quadrature
//! step are carried in [`EvalOptions`].

use super::{rat_to_f64, symbolic_eq, Expr, Func, SymbolTable};
use rand::Rng;

/// Options for numeric evaluation: the antiderivative base point and the
/// quadrature step used for `Int` nodes.
#[derive(Clone, Copy, Debug)]
pub struct EvalOptions {
    pub quad_base: f64,
    pub quad_step: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { quad_base: 0.0, quad_step: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero at x = {x}")]
    DivisionByZero { x: f64 },
    #[error("log of non-positive argument {arg} at x = {x}")]
    LogDomain { arg: f64, x: f64 },
    #[error("symbol `{name}` has no instantiation in the table")]
    UninstantiatedSymbol { name: String },
    #[error("non-finite value while evaluating at x = {x}")]
    NonFinite { x: f64 },
    #[error("no singularity-free sample point found after {0} attempts")]
    TooManySingular(u32),
}

/// Evaluates with default options (base point 0, quadrature step 1e-3).
pub fn evaluate(e: &Expr, x: f64, table: &SymbolTable) -> Result<f64, EvalError> {
    evaluate_with(e, x, table, EvalOptions::default())
}

pub fn evaluate_with(
    e: &Expr,
    x: f64,
    table: &SymbolTable,
    opts: EvalOptions,
) -> Result<f64, EvalError> {
    let v = eval_node(e, x, table, &opts)?;
    if !v.is_finite() {
        return Err(EvalError::NonFinite { x });
    }
    Ok(v)
}

fn eval_node(e: &Expr, x: f64, table: &SymbolTable, opts: &EvalOptions) -> Result<f64, EvalError> {
    match e {
        Expr::Const(c) => Ok(rat_to_f64(c)),
        Expr::X => Ok(x),
        Expr::Sym { name, order } => {
            let inst = table
                .derivative(name, *order)
                .ok_or_else(|| EvalError::UninstantiatedSymbol { name: name.clone() })?;
            eval_node(&inst, x, table, opts)
        }
        Expr::Func(f, arg) => {
            let a = eval_node(arg, x, table, opts)?;
            Ok(match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tan => a.tan(),
                Func::Exp => a.exp(),
                Func::Log => {
                    if a <= 0.0 {
                        return Err(EvalError::LogDomain { arg: a, x });
                    }
                    a.ln()
                }
            })
        }
        Expr::Int(arg) => simpson(arg, opts.quad_base, x, table, opts),
        Expr::Neg(a) => Ok(-eval_node(a, x, table, opts)?),
        Expr::Add(a, b) => Ok(eval_node(a, x, table, opts)? + eval_node(b, x, table, opts)?),
        Expr::Sub(a, b) => Ok(eval_node(a, x, table, opts)? - eval_node(b, x, table, opts)?),
        Expr::Mul(a, b) => Ok(eval_node(a, x, table, opts)? * eval_node(b, x, table, opts)?),
        Expr::Div(a, b) => {
            let den = eval_node(b, x, table, opts)?;
            if den == 0.0 {
                return Err(EvalError::DivisionByZero { x });
            }
            Ok(eval_node(a, x, table, opts)? / den)
        }
        Expr::Pow(base, k) => Ok(eval_node(base, x, table, opts)?.powi(*k)),
    }
}

/// Composite Simpson rule from `a` to `b` with a node spacing of at most
/// the configured quadrature step (an even number of subintervals).
fn simpson(
    g: &Expr,
    a: f64,
    b: f64,
    table: &SymbolTable,
    opts: &EvalOptions,
) -> Result<f64, EvalError> {
    if a == b {
        return Ok(0.0);
    }
    let span = b - a;
    let mut n = (span.abs() / opts.quad_step).ceil() as usize;
    n = n.max(2);
    if n % 2 == 1 {
        n += 1;
    }
    let h = span / n as f64;
    let mut acc = eval_node(g, a, table, opts)? + eval_node(g, b, table, opts)?;
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * eval_node(g, a + h * i as f64, table, opts)?;
    }
    Ok(acc * h / 3.0)
}

const SAMPLE_LO: f64 = -2.0;
const SAMPLE_HI: f64 = 2.0;
const MAX_RESAMPLES: u32 = 100;

/// Relative tolerance for numeric agreement in [`equals`].
pub const EQUALS_REL_TOL: f64 = 1e-9;

/// Decides equality of two expressions: exact symbolic equality of normal
/// forms first, then agreement at `trials` random sample points within
/// relative tolerance [`EQUALS_REL_TOL`]. Sample points where either side
/// hits a singularity (division by zero, log domain, overflow) are redrawn;
/// a missing symbol instantiation is an error, not a disagreement.
pub fn equals(
    a: &Expr,
    b: &Expr,
    table: &SymbolTable,
    trials: u32,
    rng: &mut impl Rng,
) -> Result<bool, EvalError> {
    if symbolic_eq(a, b) {
        return Ok(true);
    }
    let opts = EvalOptions::default();
    let mut done = 0;
    let mut consecutive_failures = 0;
    while done < trials {
        let x = rng.gen_range(SAMPLE_LO..SAMPLE_HI);
        let va = evaluate_with(a, x, table, opts);
        let vb = evaluate_with(b, x, table, opts);
        match (va, vb) {
            (Ok(va), Ok(vb)) => {
                consecutive_failures = 0;
                done += 1;
                let scale = va.abs().max(vb.abs()).max(1.0);
                if (va - vb).abs() > EQUALS_REL_TOL * scale {
                    return Ok(false);
                }
            }
            (Err(EvalError::UninstantiatedSymbol { name }), _)
            | (_, Err(EvalError::UninstantiatedSymbol { name })) => {
                return Err(EvalError::UninstantiatedSymbol { name });
            }
            _ => {
                consecutive_failures += 1;
                if consecutive_failures >= MAX_RESAMPLES {
                    return Err(EvalError::TooManySingular(MAX_RESAMPLES));
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn evaluates_arithmetic() {
        let e = parse("x^2 + 3*x - 1/2").unwrap();
        let t = SymbolTable::new();
        let v = evaluate(&e, 2.0, &t).unwrap();
        assert!((v - 9.5).abs() < 1e-12);
    }

    #[test]
    fn evaluates_symbols_through_table() {
        let mut t = SymbolTable::new();
        t.insert("p", parse("x^3").unwrap()).unwrap();
        let e = parse("p''(x)").unwrap();
        let v = evaluate(&e, 2.0, &t).unwrap();
        assert!((v - 12.0).abs() < 1e-12);
    }

    #[test]
    fn missing_symbol_is_an_error() {
        let e = parse("q(x)").unwrap();
        let t = SymbolTable::new();
        assert_eq!(
            evaluate(&e, 0.0, &t),
            Err(EvalError::UninstantiatedSymbol { name: "q".into() })
        );
    }

    #[test]
    fn integral_matches_antiderivative() {
        // Int(x^2) from 0 to 1.5 = 1.125; Simpson is exact on cubics.
        let e = parse("Int(x^2)").unwrap();
        let t = SymbolTable::new();
        let v = evaluate(&e, 1.5, &t).unwrap();
        assert!((v - 1.125).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn integral_of_transcendental_is_accurate() {
        // Int(cos(x)) at x = 1 is sin(1); Simpson at step 1e-3 is far
        // below 1e-10 error.
        let e = parse("Int(cos(x))").unwrap();
        let t = SymbolTable::new();
        let v = evaluate(&e, 1.0, &t).unwrap();
        assert!((v - 1.0_f64.sin()).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn integral_respects_direction() {
        let e = parse("Int(x^2)").unwrap();
        let t = SymbolTable::new();
        let v = evaluate(&e, -1.5, &t).unwrap();
        assert!((v + 1.125).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn log_domain_is_reported() {
        let e = parse("log(x)").unwrap();
        let t = SymbolTable::new();
        assert!(matches!(
            evaluate(&e, -1.0, &t),
            Err(EvalError::LogDomain { .. })
        ));
    }

    #[test]
    fn equals_accepts_trig_identity_numerically() {
        // sin^2 + cos^2 = 1 is not polynomial-detectable, only numeric.
        let a = parse("sin(x)^2 + cos(x)^2").unwrap();
        let b = parse("1").unwrap();
        let t = SymbolTable::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(equals(&a, &b, &t, 8, &mut rng).unwrap());
    }

    #[test]
    fn equals_rejects_near_misses() {
        let a = parse("x^2 + 1/1000000").unwrap();
        let b = parse("x^2").unwrap();
        let t = SymbolTable::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(!equals(&a, &b, &t, 8, &mut rng).unwrap());
    }

    #[test]
    fn equals_resamples_past_singularities() {
        // log(x^2) = 2 log(x) only where both sides are defined; samples
        // with x < 0 hit the log domain error and are redrawn.
        let a = parse("log(x^2)").unwrap();
        let b = parse("2*log(x)").unwrap();
        let t = SymbolTable::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(equals(&a, &b, &t, 8, &mut rng).unwrap());
    }
}
