//! Exact symbolic expressions over one independent variable.
//!
//! An [`Expr`] is a tree of exact rational constants, the variable `x`,
//! opaque function symbols with a derivative order (`a2''` is the symbol
//! `a2` differentiated twice), the unary functions sin/cos/tan/exp/log, an
//! antiderivative node `Int(g)` (integral of `g` from a fixed base point to
//! `x`), and the arithmetic operations. Exponents are integers; all
//! coefficient arithmetic is exact rational arithmetic, never floating
//! point.

mod canon;
mod eval;
mod parse;
mod print;

pub use canon::{normalize, symbolic_eq, symbolic_ratio};
pub(crate) use canon::canon;
pub use eval::{equals, evaluate, evaluate_with, EvalError, EvalOptions};
pub use parse::{parse, ParseError};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use std::collections::BTreeMap;
use std::fmt;

/// Exact rational scalar used throughout the crate.
pub type Rat = num_rational::BigRational;

/// Builds a `Rat` from an integer.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Builds a `Rat` from a numerator/denominator pair. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Unary function heads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }
}

/// Symbolic expression tree.
///
/// `Sym { name, order }` is an opaque function of `x` differentiated
/// `order` times; `Int` is the antiderivative of its argument vanishing at
/// the evaluator's base point, so differentiation peels it off exactly.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Const(Rat),
    X,
    Sym { name: String, order: u32 },
    Func(Func, Box<Expr>),
    Int(Box<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Const(rat_int(n))
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::Const(rat(n, d))
    }

    pub fn from_rat(r: Rat) -> Expr {
        Expr::Const(r)
    }

    pub fn x() -> Expr {
        Expr::X
    }

    /// Symbol with derivative order 0.
    pub fn sym(name: &str) -> Expr {
        Expr::Sym { name: name.to_string(), order: 0 }
    }

    /// Symbol differentiated `order` times.
    pub fn symd(name: &str, order: u32) -> Expr {
        Expr::Sym { name: name.to_string(), order }
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        Expr::Func(f, Box::new(arg))
    }

    pub fn sin(arg: Expr) -> Expr {
        Expr::func(Func::Sin, arg)
    }

    pub fn cos(arg: Expr) -> Expr {
        Expr::func(Func::Cos, arg)
    }

    pub fn tan(arg: Expr) -> Expr {
        Expr::func(Func::Tan, arg)
    }

    pub fn exp(arg: Expr) -> Expr {
        Expr::func(Func::Exp, arg)
    }

    pub fn log(arg: Expr) -> Expr {
        Expr::func(Func::Log, arg)
    }

    /// Antiderivative of `arg` from the evaluation base point to `x`.
    pub fn integral(arg: Expr) -> Expr {
        Expr::Int(Box::new(arg))
    }

    /// Integer power with identity folding: `e^0 = 1`, `e^1 = e`, and
    /// constant bases fold to a constant (negative exponents require a
    /// non-zero constant base).
    pub fn pow(base: Expr, exp: i32) -> Expr {
        match exp {
            0 => Expr::int(1),
            1 => base,
            _ => {
                if let Expr::Const(ref c) = base {
                    if !c.is_zero() || exp > 0 {
                        return Expr::Const(rat_pow(c, exp));
                    }
                }
                Expr::Pow(Box::new(base), exp)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_one())
    }

    /// True if the tree contains any `Sym` node.
    pub fn contains_symbols(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::X => false,
            Expr::Sym { .. } => true,
            Expr::Func(_, a) | Expr::Int(a) | Expr::Neg(a) | Expr::Pow(a, _) => {
                a.contains_symbols()
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.contains_symbols() || b.contains_symbols()
            }
        }
    }

    /// True if the tree contains any `Int` node.
    pub fn contains_integral(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::X | Expr::Sym { .. } => false,
            Expr::Int(_) => true,
            Expr::Func(_, a) | Expr::Neg(a) | Expr::Pow(a, _) => a.contains_integral(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.contains_integral() || b.contains_integral()
            }
        }
    }

    /// Symbol names appearing in the tree, each with the highest derivative
    /// order it occurs at.
    pub fn symbols(&self) -> BTreeMap<String, u32> {
        fn walk(e: &Expr, out: &mut BTreeMap<String, u32>) {
            match e {
                Expr::Const(_) | Expr::X => {}
                Expr::Sym { name, order } => {
                    let entry = out.entry(name.clone()).or_insert(*order);
                    if *order > *entry {
                        *entry = *order;
                    }
                }
                Expr::Func(_, a) | Expr::Int(a) | Expr::Neg(a) | Expr::Pow(a, _) => walk(a, out),
                Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = BTreeMap::new();
        walk(self, &mut out);
        out
    }
}

pub(crate) fn rat_pow(c: &Rat, exp: i32) -> Rat {
    if exp >= 0 {
        num_traits::pow::pow(c.clone(), exp as usize)
    } else {
        num_traits::pow::pow(c.clone(), (-exp) as usize).recip()
    }
}

/// Sum with identity folding (`0 + e = e`, constants combine).
pub fn add(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        return b;
    }
    if b.is_zero() {
        return a;
    }
    if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
        return Expr::Const(x + y);
    }
    Expr::Add(Box::new(a), Box::new(b))
}

/// Difference with identity folding.
pub fn sub(a: Expr, b: Expr) -> Expr {
    if b.is_zero() {
        return a;
    }
    if a.is_zero() {
        return neg(b);
    }
    if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
        return Expr::Const(x - y);
    }
    Expr::Sub(Box::new(a), Box::new(b))
}

/// Product with identity and annihilator folding.
pub fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        return Expr::int(0);
    }
    if a.is_one() {
        return b;
    }
    if b.is_one() {
        return a;
    }
    if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
        return Expr::Const(x * y);
    }
    Expr::Mul(Box::new(a), Box::new(b))
}

/// Quotient with identity folding. Panics on a syntactically zero constant
/// divisor; zero normal-form divisors are the caller's responsibility.
pub fn div(a: Expr, b: Expr) -> Expr {
    if let Expr::Const(y) = &b {
        assert!(!y.is_zero(), "division by zero constant");
        if let Expr::Const(x) = &a {
            return Expr::Const(x / y);
        }
        if y.is_one() {
            return a;
        }
    }
    if a.is_zero() {
        return Expr::int(0);
    }
    Expr::Div(Box::new(a), Box::new(b))
}

/// Negation; folds constants and double negation.
pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

macro_rules! impl_ops {
    ($trait:ident, $method:ident, $f:ident) => {
        impl std::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $f(self, rhs)
            }
        }
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $f(self.clone(), rhs.clone())
            }
        }
    };
}

impl_ops!(Add, add, add);
impl_ops!(Sub, sub, sub);
impl_ops!(Mul, mul, mul);
impl_ops!(Div, div, div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(self.clone())
    }
}

/// Exact derivative with respect to `x`.
///
/// Symbols bump their order, `Int` nodes peel off, and the chain rule is
/// applied through function and power nodes. The result is built with the
/// folding constructors but is not otherwise simplified; apply
/// [`normalize`] for the canonical form.
pub fn differentiate(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) => Expr::int(0),
        Expr::X => Expr::int(1),
        Expr::Sym { name, order } => Expr::symd(name, order + 1),
        Expr::Int(arg) => (**arg).clone(),
        Expr::Func(f, arg) => {
            let da = differentiate(arg);
            let outer = match f {
                Func::Sin => Expr::cos((**arg).clone()),
                Func::Cos => neg(Expr::sin((**arg).clone())),
                Func::Tan => add(
                    Expr::int(1),
                    Expr::pow(Expr::tan((**arg).clone()), 2),
                ),
                Func::Exp => Expr::exp((**arg).clone()),
                Func::Log => return div(da, (**arg).clone()),
            };
            mul(outer, da)
        }
        Expr::Neg(a) => neg(differentiate(a)),
        Expr::Add(a, b) => add(differentiate(a), differentiate(b)),
        Expr::Sub(a, b) => sub(differentiate(a), differentiate(b)),
        Expr::Mul(a, b) => add(
            mul(differentiate(a), (**b).clone()),
            mul((**a).clone(), differentiate(b)),
        ),
        Expr::Div(a, b) => div(
            sub(
                mul(differentiate(a), (**b).clone()),
                mul((**a).clone(), differentiate(b)),
            ),
            Expr::pow((**b).clone(), 2),
        ),
        Expr::Pow(base, k) => mul(
            mul(Expr::int(*k as i64), Expr::pow((**base).clone(), k - 1)),
            differentiate(base),
        ),
    }
}

/// `n`-th derivative.
pub fn differentiate_n(e: &Expr, n: u32) -> Expr {
    let mut cur = e.clone();
    for _ in 0..n {
        cur = differentiate(&cur);
    }
    cur
}

/// Replaces every occurrence of the symbol `name` (at any derivative
/// order `k`) with the `k`-th derivative of `replacement`.
pub fn substitute_symbol(e: &Expr, name: &str, replacement: &Expr) -> Expr {
    let max_order = e.symbols().get(name).copied();
    let Some(max_order) = max_order else {
        return e.clone();
    };
    let mut derivs = Vec::with_capacity(max_order as usize + 1);
    derivs.push(replacement.clone());
    for k in 0..max_order {
        let next = differentiate(&derivs[k as usize]);
        derivs.push(next);
    }
    fn walk(e: &Expr, name: &str, derivs: &[Expr]) -> Expr {
        match e {
            Expr::Const(_) | Expr::X => e.clone(),
            Expr::Sym { name: n, order } => {
                if n == name {
                    derivs[*order as usize].clone()
                } else {
                    e.clone()
                }
            }
            Expr::Func(f, a) => Expr::func(*f, walk(a, name, derivs)),
            Expr::Int(a) => Expr::integral(walk(a, name, derivs)),
            Expr::Neg(a) => neg(walk(a, name, derivs)),
            Expr::Add(a, b) => add(walk(a, name, derivs), walk(b, name, derivs)),
            Expr::Sub(a, b) => sub(walk(a, name, derivs), walk(b, name, derivs)),
            Expr::Mul(a, b) => mul(walk(a, name, derivs), walk(b, name, derivs)),
            Expr::Div(a, b) => div(walk(a, name, derivs), walk(b, name, derivs)),
            Expr::Pow(a, k) => Expr::pow(walk(a, name, derivs), *k),
        }
    }
    walk(e, name, &derivs)
}

/// Error from [`substitute_x`].
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ComposeError {
    #[error("cannot compose through an opaque symbol `{0}`")]
    Symbol(String),
    #[error("cannot compose through an antiderivative node")]
    Integral,
}

/// Textual substitution of `inner` for `x`, valid only on closed-form
/// trees: symbols and `Int` nodes carry derivative semantics tied to `x`
/// and are rejected.
pub fn substitute_x(e: &Expr, inner: &Expr) -> Result<Expr, ComposeError> {
    match e {
        Expr::Const(_) => Ok(e.clone()),
        Expr::X => Ok(inner.clone()),
        Expr::Sym { name, .. } => Err(ComposeError::Symbol(name.clone())),
        Expr::Int(_) => Err(ComposeError::Integral),
        Expr::Func(f, a) => Ok(Expr::func(*f, substitute_x(a, inner)?)),
        Expr::Neg(a) => Ok(neg(substitute_x(a, inner)?)),
        Expr::Add(a, b) => Ok(add(substitute_x(a, inner)?, substitute_x(b, inner)?)),
        Expr::Sub(a, b) => Ok(sub(substitute_x(a, inner)?, substitute_x(b, inner)?)),
        Expr::Mul(a, b) => Ok(mul(substitute_x(a, inner)?, substitute_x(b, inner)?)),
        Expr::Div(a, b) => Ok(div(substitute_x(a, inner)?, substitute_x(b, inner)?)),
        Expr::Pow(a, k) => Ok(Expr::pow(substitute_x(a, inner)?, *k)),
    }
}

/// Error from [`SymbolTable::insert`].
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SymbolTableError {
    #[error("instantiation of `{name}` must be closed form, found symbol `{offending}`")]
    NotClosedForm { name: String, offending: String },
}

/// Closed-form instantiations for opaque symbols.
///
/// Each entry maps a symbol name to a concrete expression of `x`;
/// derivatives of the instantiation are computed exactly on demand and
/// cached up to a small order at insertion.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    entries: BTreeMap<String, Vec<Expr>>,
}

const CACHED_DERIVS: usize = 4;

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, expr: Expr) -> Result<(), SymbolTableError> {
        if let Some((offending, _)) = expr.symbols().into_iter().next() {
            return Err(SymbolTableError::NotClosedForm {
                name: name.to_string(),
                offending,
            });
        }
        let mut derivs = Vec::with_capacity(CACHED_DERIVS + 1);
        derivs.push(expr);
        for k in 0..CACHED_DERIVS {
            let next = differentiate(&derivs[k]);
            derivs.push(next);
        }
        self.entries.insert(name.to_string(), derivs);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Expr> {
        self.entries.get(name).map(|v| &v[0])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `order`-th derivative of the instantiation of `name`, or `None` if
    /// the symbol has no entry.
    pub fn derivative(&self, name: &str, order: u32) -> Option<Expr> {
        let derivs = self.entries.get(name)?;
        let order = order as usize;
        if order < derivs.len() {
            return Some(derivs[order].clone());
        }
        let mut cur = derivs.last().expect("cache is never empty").clone();
        for _ in derivs.len() - 1..order {
            cur = differentiate(&cur);
        }
        Some(cur)
    }

    /// Substitutes every table entry into `e`, leaving other symbols alone.
    pub fn substitute_into(&self, e: &Expr) -> Expr {
        let mut cur = e.clone();
        for (name, derivs) in &self.entries {
            cur = substitute_symbol(&cur, name, &derivs[0]);
        }
        cur
    }

    /// Random polynomial in `x` of the given degree with coefficients drawn
    /// uniformly from [-2, 2] and converted exactly to rationals.
    pub fn random_poly(rng: &mut impl Rng, degree: u32) -> Expr {
        let mut e = Expr::int(0);
        for k in 0..=degree {
            let c: f64 = rng.gen_range(-2.0..2.0);
            let c = Rat::from_float(c).expect("finite coefficient");
            e = add(e, mul(Expr::Const(c), Expr::pow(Expr::x(), k as i32)));
        }
        e
    }

    /// Table instantiating each name with an independent random polynomial.
    pub fn random(names: &[&str], degree: u32, rng: &mut impl Rng) -> SymbolTable {
        let mut t = SymbolTable::new();
        for name in names {
            t.insert(name, Self::random_poly(rng, degree))
                .expect("random polynomials are closed form");
        }
        t
    }
}

impl fmt::Display for SymbolTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, derivs)) in self.entries.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{} := {}", name, derivs[0])?;
        }
        Ok(())
    }
}

/// Formats a rational for display, using `p/q` form only when the
/// denominator is not 1.
pub(crate) fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Converts a rational to `f64`, panicking only on overflow far beyond the
/// magnitudes this crate produces.
pub(crate) fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_constant_and_x() {
        assert_eq!(differentiate(&Expr::rational(3, 4)), Expr::int(0));
        assert_eq!(differentiate(&Expr::x()), Expr::int(1));
    }

    #[test]
    fn derivative_bumps_symbol_order() {
        let e = Expr::symd("a2", 2);
        assert_eq!(differentiate(&e), Expr::symd("a2", 3));
    }

    #[test]
    fn derivative_peels_integral() {
        let e = Expr::integral(Expr::sym("q"));
        assert_eq!(differentiate(&e), Expr::sym("q"));
    }

    #[test]
    fn derivative_of_gauge_factor() {
        // d/dx exp(-(1/3) Int a2) = -(a2/3) exp(-(1/3) Int a2)
        let inner = mul(Expr::rational(-1, 3), Expr::integral(Expr::sym("a2")));
        let e = Expr::exp(inner.clone());
        let expected = mul(
            mul(Expr::rational(-1, 3), Expr::sym("a2")),
            Expr::exp(inner),
        );
        assert_eq!(normalize(&differentiate(&e)), normalize(&expected));
    }

    #[test]
    fn substitute_respects_derivative_orders() {
        // a1 := x^2, so a1'' becomes 2
        let e = add(Expr::symd("a1", 2), Expr::sym("a1"));
        let out = substitute_symbol(&e, "a1", &Expr::pow(Expr::x(), 2));
        let expected = add(Expr::int(2), Expr::pow(Expr::x(), 2));
        assert_eq!(normalize(&out), normalize(&expected));
    }

    #[test]
    fn substitute_x_rejects_symbols() {
        let e = Expr::sym("p");
        assert_eq!(
            substitute_x(&e, &Expr::x()),
            Err(ComposeError::Symbol("p".into()))
        );
    }

    #[test]
    fn table_derivatives_extend_past_cache() {
        let mut t = SymbolTable::new();
        t.insert("p", Expr::pow(Expr::x(), 7)).unwrap();
        let d6 = t.derivative("p", 6).unwrap();
        // 7!/(1!) x = 5040 x
        assert_eq!(normalize(&d6), normalize(&mul(Expr::int(5040), Expr::x())));
    }

    #[test]
    fn table_rejects_open_forms() {
        let mut t = SymbolTable::new();
        let err = t.insert("p", Expr::sym("q")).unwrap_err();
        assert!(matches!(err, SymbolTableError::NotClosedForm { .. }));
    }
}
