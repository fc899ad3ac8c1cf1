//! Schwarzian derivatives, Möbius maps, and the order-3 jet arithmetic
//! they are computed with.
//!
//! The Schwarzian of `f` is `f'''/f' - (3/2)(f''/f')^2`. It needs exactly
//! a value and three derivatives at a point, so the numeric layer works
//! with [`Jet3`], a degree-3 truncated Taylor coefficient pack that
//! propagates through arithmetic by the Leibniz rule and through function
//! composition by Faa di Bruno's formula. Anything that can produce a
//! `Jet3` at a point (a symbolic expression, a fitted spline) implements
//! [`JetEval`] and can have its Schwarzian taken.

use crate::expr::{
    differentiate, evaluate_with, fmt_rat, mul, normalize, rat_int, rat_to_f64, sub, symbolic_ratio,
    EvalError, EvalOptions, Expr, Rat, SymbolTable,
};
use crate::grid::{GridError, GridFn, Spline};
use num_traits::Zero;
use rand::Rng;
use std::fmt;

/// Value and first three derivatives of a function at a point.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Jet3 {
    pub f: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Jet3 {
    pub fn new(f: f64, d1: f64, d2: f64, d3: f64) -> Jet3 {
        Jet3 { f, d1, d2, d3 }
    }

    pub fn constant(c: f64) -> Jet3 {
        Jet3 { f: c, ..Default::default() }
    }

    /// The identity function at `x`.
    pub fn variable(x: f64) -> Jet3 {
        Jet3 { f: x, d1: 1.0, d2: 0.0, d3: 0.0 }
    }

    /// Chains a univariate function through this jet: `g` holds the value
    /// and first three derivatives of the outer function at `self.f`.
    /// This is Faa di Bruno's formula truncated at order 3.
    pub fn compose(self, g: [f64; 4]) -> Jet3 {
        let [g0, g1, g2, g3] = g;
        let Jet3 { d1: f1, d2: f2, d3: f3, .. } = self;
        Jet3 {
            f: g0,
            d1: g1 * f1,
            d2: g2 * f1 * f1 + g1 * f2,
            d3: g3 * f1 * f1 * f1 + 3.0 * g2 * f1 * f2 + g1 * f3,
        }
    }

    pub fn recip(self) -> Jet3 {
        let u = self.f;
        let u2 = u * u;
        self.compose([1.0 / u, -1.0 / u2, 2.0 / (u2 * u), -6.0 / (u2 * u2)])
    }

    pub fn sin(self) -> Jet3 {
        let (s, c) = self.f.sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(self) -> Jet3 {
        let (s, c) = self.f.sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn tan(self) -> Jet3 {
        let t = self.f.tan();
        let sec2 = 1.0 + t * t;
        self.compose([
            t,
            sec2,
            2.0 * t * sec2,
            sec2 * (2.0 + 6.0 * t * t),
        ])
    }

    pub fn exp(self) -> Jet3 {
        let e = self.f.exp();
        self.compose([e, e, e, e])
    }

    pub fn ln(self) -> Jet3 {
        let u = self.f;
        self.compose([u.ln(), 1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u)])
    }

    pub fn powi(self, k: i32) -> Jet3 {
        // j-th derivative of u^k: k(k-1)..(k-j+1) u^(k-j), identically
        // zero once the falling factorial hits zero (avoids 0 * 0^-1).
        let u = self.f;
        let dpow = |j: i32| {
            let coef: f64 = (0..j).map(|i| f64::from(k - i)).product();
            if coef == 0.0 {
                0.0
            } else {
                coef * u.powi(k - j)
            }
        };
        self.compose([dpow(0), dpow(1), dpow(2), dpow(3)])
    }

    pub fn scale(self, k: f64) -> Jet3 {
        Jet3 { f: k * self.f, d1: k * self.d1, d2: k * self.d2, d3: k * self.d3 }
    }

    pub fn is_finite(self) -> bool {
        self.f.is_finite() && self.d1.is_finite() && self.d2.is_finite() && self.d3.is_finite()
    }
}

impl std::ops::Add for Jet3 {
    type Output = Jet3;
    fn add(self, o: Jet3) -> Jet3 {
        Jet3 {
            f: self.f + o.f,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
            d3: self.d3 + o.d3,
        }
    }
}

impl std::ops::Sub for Jet3 {
    type Output = Jet3;
    fn sub(self, o: Jet3) -> Jet3 {
        Jet3 {
            f: self.f - o.f,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
            d3: self.d3 - o.d3,
        }
    }
}

impl std::ops::Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self.scale(-1.0)
    }
}

/// Leibniz rule up to order 3.
impl std::ops::Mul for Jet3 {
    type Output = Jet3;
    fn mul(self, o: Jet3) -> Jet3 {
        Jet3 {
            f: self.f * o.f,
            d1: self.d1 * o.f + self.f * o.d1,
            d2: self.d2 * o.f + 2.0 * self.d1 * o.d1 + self.f * o.d2,
            d3: self.d3 * o.f
                + 3.0 * self.d2 * o.d1
                + 3.0 * self.d1 * o.d2
                + self.f * o.d3,
        }
    }
}

impl std::ops::Div for Jet3 {
    type Output = Jet3;
    // Quotient jets are products with the reciprocal jet by definition.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet3) -> Jet3 {
        self * o.recip()
    }
}

/// First-derivative magnitudes below this count as a critical point,
/// where the Schwarzian is undefined.
pub const CRITICAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchwarzError {
    #[error("critical point at x = {x}: |f'| = {deriv:e} is below {CRITICAL_FLOOR:e}")]
    CriticalPoint { x: f64, deriv: f64 },
    #[error("jet is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("möbius map needs a*d - b*c != 0")]
    SingularMobius,
    #[error("möbius map hits its pole at node {index}")]
    MobiusPole { index: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Anything that can produce a degree-3 jet at a point.
pub trait JetEval {
    fn jet3(&self, x: f64) -> Result<Jet3, SchwarzError>;
}

/// Schwarzian from an explicit jet: `d3/d1 - (3/2)(d2/d1)^2`.
pub fn schwarzian_of_jet(j: Jet3, x: f64) -> Result<f64, SchwarzError> {
    if !j.is_finite() {
        return Err(SchwarzError::NonFinite { x });
    }
    if j.d1.abs() < CRITICAL_FLOOR {
        return Err(SchwarzError::CriticalPoint { x, deriv: j.d1.abs() });
    }
    let r2 = j.d2 / j.d1;
    Ok(j.d3 / j.d1 - 1.5 * r2 * r2)
}

/// Schwarzian derivative of `f` at `x`.
pub fn schwarzian_at(f: &impl JetEval, x: f64) -> Result<f64, SchwarzError> {
    schwarzian_of_jet(f.jet3(x)?, x)
}

/// A symbolic expression viewed as a numeric function for jet evaluation.
#[derive(Clone, Copy)]
pub struct ExprFn<'a> {
    pub expr: &'a Expr,
    pub table: &'a SymbolTable,
    pub opts: EvalOptions,
}

impl<'a> ExprFn<'a> {
    pub fn new(expr: &'a Expr, table: &'a SymbolTable) -> ExprFn<'a> {
        ExprFn { expr, table, opts: EvalOptions::default() }
    }
}

impl JetEval for ExprFn<'_> {
    fn jet3(&self, x: f64) -> Result<Jet3, SchwarzError> {
        let j = jet_expr(self.expr, x, self.table, &self.opts)?;
        if !j.is_finite() {
            return Err(SchwarzError::NonFinite { x });
        }
        Ok(j)
    }
}

fn jet_expr(e: &Expr, x: f64, table: &SymbolTable, opts: &EvalOptions) -> Result<Jet3, EvalError> {
    Ok(match e {
        Expr::Const(c) => Jet3::constant(rat_to_f64(c)),
        Expr::X => Jet3::variable(x),
        Expr::Sym { name, order } => {
            let mut vals = [0.0; 4];
            for (k, v) in vals.iter_mut().enumerate() {
                let d = table
                    .derivative(name, order + k as u32)
                    .ok_or_else(|| EvalError::UninstantiatedSymbol { name: name.clone() })?;
                *v = evaluate_with(&d, x, table, *opts)?;
            }
            Jet3::new(vals[0], vals[1], vals[2], vals[3])
        }
        Expr::Func(f, arg) => {
            let ja = jet_expr(arg, x, table, opts)?;
            match f {
                crate::expr::Func::Sin => ja.sin(),
                crate::expr::Func::Cos => ja.cos(),
                crate::expr::Func::Tan => ja.tan(),
                crate::expr::Func::Exp => ja.exp(),
                crate::expr::Func::Log => {
                    if ja.f <= 0.0 {
                        return Err(EvalError::LogDomain { arg: ja.f, x });
                    }
                    ja.ln()
                }
            }
        }
        Expr::Int(arg) => {
            // The antiderivative's derivatives are the argument's jet
            // shifted down one order; the value comes from quadrature.
            let ja = jet_expr(arg, x, table, opts)?;
            let value = evaluate_with(e, x, table, *opts)?;
            Jet3::new(value, ja.f, ja.d1, ja.d2)
        }
        Expr::Neg(a) => -jet_expr(a, x, table, opts)?,
        Expr::Add(a, b) => jet_expr(a, x, table, opts)? + jet_expr(b, x, table, opts)?,
        Expr::Sub(a, b) => jet_expr(a, x, table, opts)? - jet_expr(b, x, table, opts)?,
        Expr::Mul(a, b) => jet_expr(a, x, table, opts)? * jet_expr(b, x, table, opts)?,
        Expr::Div(a, b) => {
            let jb = jet_expr(b, x, table, opts)?;
            if jb.f == 0.0 {
                return Err(EvalError::DivisionByZero { x });
            }
            jet_expr(a, x, table, opts)? / jb
        }
        Expr::Pow(base, k) => {
            let jb = jet_expr(base, x, table, opts)?;
            if *k < 0 && jb.f == 0.0 {
                return Err(EvalError::DivisionByZero { x });
            }
            jb.powi(*k)
        }
    })
}

impl JetEval for Spline {
    fn jet3(&self, x: f64) -> Result<Jet3, SchwarzError> {
        let [f, d1, d2, d3] = self.eval_derivs(x)?;
        Ok(Jet3::new(f, d1, d2, d3))
    }
}

/// The Schwarzian attached to a second-order equation
/// `u'' + p u' + q u = 0` through the ratio of its solutions:
/// `2q - p^2/2 - p'`, returned in normal form.
pub fn sl_schwarzian(p: &Expr, q: &Expr) -> Expr {
    normalize(&sub(
        sub(
            mul(Expr::int(2), q.clone()),
            mul(Expr::rational(1, 2), Expr::pow(p.clone(), 2)),
        ),
        differentiate(p),
    ))
}

/// Möbius map `f -> (a f + b)/(c f + d)` with exact rational entries and
/// nonzero determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct Mobius {
    a: Rat,
    b: Rat,
    c: Rat,
    d: Rat,
}

impl Mobius {
    pub fn new(a: Rat, b: Rat, c: Rat, d: Rat) -> Result<Mobius, SchwarzError> {
        let det = &a * &d - &b * &c;
        if det.is_zero() {
            return Err(SchwarzError::SingularMobius);
        }
        Ok(Mobius { a, b, c, d })
    }

    pub fn identity() -> Mobius {
        Mobius {
            a: rat_int(1),
            b: rat_int(0),
            c: rat_int(0),
            d: rat_int(1),
        }
    }

    /// Random map with small integer entries and nonzero determinant.
    pub fn random(rng: &mut impl Rng) -> Mobius {
        loop {
            let mut pick = || rat_int(rng.gen_range(-3_i64..=3));
            let (a, b, c, d) = (pick(), pick(), pick(), pick());
            if let Ok(m) = Mobius::new(a, b, c, d) {
                return m;
            }
        }
    }

    pub fn det(&self) -> Rat {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn entries(&self) -> (&Rat, &Rat, &Rat, &Rat) {
        (&self.a, &self.b, &self.c, &self.d)
    }

    /// Applies the map to an expression, producing `(a f + b)/(c f + d)`.
    pub fn apply_expr(&self, f: &Expr) -> Expr {
        let num = crate::expr::add(
            mul(Expr::from_rat(self.a.clone()), f.clone()),
            Expr::from_rat(self.b.clone()),
        );
        let den = crate::expr::add(
            mul(Expr::from_rat(self.c.clone()), f.clone()),
            Expr::from_rat(self.d.clone()),
        );
        crate::expr::div(num, den)
    }

    /// Applies the map to a jet numerically.
    pub fn apply_jet(&self, j: Jet3) -> Jet3 {
        let a = rat_to_f64(&self.a);
        let b = rat_to_f64(&self.b);
        let c = rat_to_f64(&self.c);
        let d = rat_to_f64(&self.d);
        let num = j.scale(a) + Jet3::constant(b);
        let den = j.scale(c) + Jet3::constant(d);
        num / den
    }

    /// Applies the map to sampled values, transforming the derivative
    /// track through the quotient rule when present. Fails if any node
    /// sits on the map's pole.
    pub fn apply_grid(&self, g: &GridFn) -> Result<GridFn, SchwarzError> {
        let a = rat_to_f64(&self.a);
        let b = rat_to_f64(&self.b);
        let c = rat_to_f64(&self.c);
        let d = rat_to_f64(&self.d);
        let det = rat_to_f64(&self.det());
        let mut values = Vec::with_capacity(g.len());
        for (index, v) in g.values().iter().enumerate() {
            let den = c * v + d;
            if den == 0.0 || !((a * v + b) / den).is_finite() {
                return Err(SchwarzError::MobiusPole { index });
            }
            values.push((a * v + b) / den);
        }
        let out = match g.derivs() {
            None => GridFn::new(g.start(), g.step(), values)?,
            Some(dv) => {
                let derivs = g
                    .values()
                    .iter()
                    .zip(dv)
                    .map(|(v, d1)| {
                        let den = c * v + d;
                        det * d1 / (den * den)
                    })
                    .collect();
                GridFn::with_derivs(g.start(), g.step(), values, derivs)?
            }
        };
        Ok(out)
    }

    pub fn compose(&self, inner: &Mobius) -> Mobius {
        Mobius {
            a: &self.a * &inner.a + &self.b * &inner.c,
            b: &self.a * &inner.b + &self.b * &inner.d,
            c: &self.c * &inner.a + &self.d * &inner.c,
            d: &self.c * &inner.b + &self.d * &inner.d,
        }
    }
}

impl fmt::Display for Mobius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(({})*f + ({}))/(({})*f + ({}))",
            fmt_rat(&self.a),
            fmt_rat(&self.b),
            fmt_rat(&self.c),
            fmt_rat(&self.d)
        )
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PropError {
    #[error("proportionality against an expression whose normal form is zero")]
    ZeroDivisor,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Instantiations used to confirm a symbolic proportionality numerically.
pub const PROP_CONFIRM_TRIALS: usize = 8;
/// Relative tolerance for the numeric confirmation.
pub const PROP_CONFIRM_TOL: f64 = 1e-9;

/// Detects an exact constant ratio `a = k * b`.
///
/// The ratio is found symbolically on normal forms (cross-multiplied, so
/// common factors cannot fool it) and then confirmed numerically at
/// [`PROP_CONFIRM_TRIALS`] random closed-form instantiations of every
/// symbol involved; `None` means no single exact constant relates the two
/// (or the confirmation failed). `b` must not normalize to zero.
pub fn proportionality(
    a: &Expr,
    b: &Expr,
    rng: &mut impl Rng,
) -> Result<Option<Rat>, PropError> {
    if crate::expr::symbolic_eq(b, &Expr::int(0)) {
        return Err(PropError::ZeroDivisor);
    }
    let Some(k) = symbolic_ratio(a, b) else {
        return Ok(None);
    };
    let kf = rat_to_f64(&k);

    let mut names: std::collections::BTreeSet<String> = a.symbols().into_keys().collect();
    names.extend(b.symbols().into_keys());
    let names: Vec<&str> = names.iter().map(|s| s.as_str()).collect();

    let opts = EvalOptions::default();
    for _ in 0..PROP_CONFIRM_TRIALS {
        let table = SymbolTable::random(&names, 4, rng);
        let mut attempts = 0;
        loop {
            let x = rng.gen_range(-2.0..2.0);
            let va = evaluate_with(a, x, &table, opts);
            let vb = evaluate_with(b, x, &table, opts);
            match (va, vb) {
                (Ok(va), Ok(vb)) => {
                    let scale = va.abs().max(vb.abs()).max(1.0);
                    if (va - kf * vb).abs() > PROP_CONFIRM_TOL * scale {
                        return Ok(None);
                    }
                    break;
                }
                (Err(EvalError::UninstantiatedSymbol { name }), _)
                | (_, Err(EvalError::UninstantiatedSymbol { name })) => {
                    return Err(PropError::Eval(EvalError::UninstantiatedSymbol { name }));
                }
                _ => {
                    attempts += 1;
                    if attempts >= 100 {
                        return Err(PropError::Eval(EvalError::TooManySingular(100)));
                    }
                }
            }
        }
    }
    Ok(Some(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, rat};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn closed_fn(src: &str) -> Expr {
        parse(src).unwrap()
    }

    #[test]
    fn schwarzian_of_exponential_is_constant() {
        let e = closed_fn("exp(x)");
        let t = SymbolTable::new();
        let f = ExprFn::new(&e, &t);
        for x in [-1.0, 0.0, 0.7, 2.3] {
            let s = schwarzian_at(&f, x).unwrap();
            assert!((s + 0.5).abs() < 1e-12, "S = {s} at {x}");
        }
    }

    #[test]
    fn schwarzian_of_tangent_is_two() {
        let e = closed_fn("tan(x)");
        let t = SymbolTable::new();
        let f = ExprFn::new(&e, &t);
        for x in [0.0, 0.4, 1.0, 1.4] {
            let s = schwarzian_at(&f, x).unwrap();
            assert!((s - 2.0).abs() < 1e-9, "S = {s} at {x}");
        }
    }

    #[test]
    fn schwarzian_of_mobius_map_vanishes() {
        let m = Mobius::new(rat_int(2), rat_int(1), rat_int(1), rat_int(3)).unwrap();
        let e = m.apply_expr(&Expr::x());
        let t = SymbolTable::new();
        let f = ExprFn::new(&e, &t);
        for x in [-1.0, 0.0, 0.5, 2.0] {
            let s = schwarzian_at(&f, x).unwrap();
            assert!(s.abs() < 1e-10, "S = {s} at {x}");
        }
    }

    #[test]
    fn mobius_invariance_of_schwarzian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e = closed_fn("exp(sin(x)) + x^2");
        let t = SymbolTable::new();
        let f = ExprFn::new(&e, &t);
        for _ in 0..10 {
            let m = Mobius::random(&mut rng);
            let composed = m.apply_expr(&e);
            let g = ExprFn::new(&composed, &t);
            let x = rng.gen_range(-1.0..1.0);
            let sf = schwarzian_at(&f, x).unwrap();
            match schwarzian_at(&g, x) {
                Ok(sg) => {
                    let scale = sf.abs().max(1.0);
                    assert!((sf - sg).abs() < 1e-7 * scale, "{sf} vs {sg}");
                }
                // The random map may put its pole on the sample point.
                Err(SchwarzError::NonFinite { .. }) | Err(SchwarzError::Eval(_)) => {}
                Err(other) => panic!("unexpected error {other}"),
            }
        }
    }

    #[test]
    fn composition_cocycle() {
        // S(g∘f)(x) = S(g)(f(x)) f'(x)^2 + S(f)(x) for g = tan, f = exp.
        let f_expr = closed_fn("exp(x)");
        let g_expr = closed_fn("tan(x)");
        let composed = crate::expr::substitute_x(&g_expr, &f_expr).unwrap();
        let t = SymbolTable::new();
        let jf = ExprFn::new(&f_expr, &t);
        let jg = ExprFn::new(&g_expr, &t);
        let jc = ExprFn::new(&composed, &t);
        for x in [-0.5, 0.0, 0.3] {
            let lhs = schwarzian_at(&jc, x).unwrap();
            let fx = x.exp();
            let sg = schwarzian_at(&jg, fx).unwrap();
            let sf = schwarzian_at(&jf, x).unwrap();
            let rhs = sg * fx * fx + sf;
            assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn critical_points_are_rejected() {
        let e = closed_fn("x^2");
        let t = SymbolTable::new();
        let f = ExprFn::new(&e, &t);
        assert!(matches!(
            schwarzian_at(&f, 0.0),
            Err(SchwarzError::CriticalPoint { .. })
        ));
    }

    #[test]
    fn sl_schwarzian_forms() {
        let zero = Expr::int(0);
        let q = Expr::sym("q");
        assert_eq!(sl_schwarzian(&zero, &q).to_string(), "2*q(x)");
        let p = Expr::sym("p");
        let s = sl_schwarzian(&p, &zero);
        let expected = parse("-1/2*p(x)^2 - p'(x)").unwrap();
        assert!(crate::expr::symbolic_eq(&s, &expected));
    }

    #[test]
    fn spline_jets_feed_schwarzian() {
        // Schwarzian of exp via spline jets: third-derivative error is
        // O(h), so only a coarse agreement is expected.
        let g = GridFn::sample(0.0, 1e-3, 1200, f64::exp).unwrap();
        let s = Spline::fit(&g);
        let v = schwarzian_at(&s, 0.6).unwrap();
        assert!((v + 0.5).abs() < 0.2, "S = {v}");
    }

    #[test]
    fn mobius_rejects_zero_determinant() {
        assert!(matches!(
            Mobius::new(rat_int(2), rat_int(4), rat_int(1), rat_int(2)),
            Err(SchwarzError::SingularMobius)
        ));
    }

    #[test]
    fn mobius_grid_transforms_derivatives() {
        let n = 50;
        let h = 0.01;
        let values: Vec<f64> = (0..n).map(|i| (h * i as f64).exp()).collect();
        let derivs = values.clone();
        let g = GridFn::with_derivs(0.0, h, values, derivs).unwrap();
        let m = Mobius::new(rat_int(1), rat_int(1), rat_int(1), rat_int(2)).unwrap();
        let mg = m.apply_grid(&g).unwrap();
        // (f+1)/(f+2) has derivative f' (2*1 - 1*1)/(f+2)^2.
        let i = 20;
        let fi = (h * i as f64).exp();
        let expect = fi / ((fi + 2.0) * (fi + 2.0));
        let got = mg.derivs().unwrap()[i];
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn proportionality_finds_exact_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = parse("3/2*p(x)*q(x)").unwrap();
        let b = parse("q(x)*p(x)").unwrap();
        assert_eq!(proportionality(&a, &b, &mut rng).unwrap(), Some(rat(3, 2)));
    }

    #[test]
    fn proportionality_rejects_non_constant_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = parse("p(x)*q(x) + x").unwrap();
        let b = parse("p(x)*q(x)").unwrap();
        assert_eq!(proportionality(&a, &b, &mut rng).unwrap(), None);
    }

    #[test]
    fn proportionality_rejects_zero_divisor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = parse("p(x)").unwrap();
        let b = parse("x - x").unwrap();
        assert!(matches!(
            proportionality(&a, &b, &mut rng),
            Err(PropError::ZeroDivisor)
        ));
    }

    #[test]
    fn jets_match_symbolic_derivatives() {
        let e = parse("exp(sin(x))*x^2 + log(x + 3)").unwrap();
        let t = SymbolTable::new();
        let x = 0.83;
        let j = jet_expr(&e, x, &t, &EvalOptions::default()).unwrap();
        let mut d = e.clone();
        let mut expected = Vec::new();
        for _ in 0..4 {
            expected.push(crate::expr::evaluate(&d, x, &t).unwrap());
            d = differentiate(&d);
        }
        for (got, want) in [j.f, j.d1, j.d2, j.d3].iter().zip(&expected) {
            assert!(
                (got - want).abs() < 1e-9 * want.abs().max(1.0),
                "{got} vs {want}"
            );
        }
    }

    #[test]
    fn integral_jets_shift_orders() {
        let e = parse("Int(cos(x))").unwrap();
        let t = SymbolTable::new();
        let x = 0.9;
        let j = jet_expr(&e, x, &t, &EvalOptions::default()).unwrap();
        assert!((j.f - x.sin()).abs() < 1e-10);
        assert!((j.d1 - x.cos()).abs() < 1e-12);
        assert!((j.d2 + x.sin()).abs() < 1e-12);
        assert!((j.d3 + x.cos()).abs() < 1e-12);
    }

    #[test]
    fn mobius_compose_matches_sequential_application() {
        let m1 = Mobius::new(rat_int(1), rat_int(2), rat_int(0), rat_int(1)).unwrap();
        let m2 = Mobius::new(rat_int(3), rat_int(0), rat_int(1), rat_int(1)).unwrap();
        let j = Jet3::variable(0.7);
        let seq = m1.apply_jet(m2.apply_jet(j));
        let comp = m1.compose(&m2).apply_jet(j);
        assert!((seq.f - comp.f).abs() < 1e-12);
        assert!((seq.d1 - comp.d1).abs() < 1e-12);
    }
}
