//! Reference forms: hand-transcribed printed versions of the chain,
//! linearized, conjugated, and depressed equations that the derivation
//! pipeline is reconciled against.
//!
//! Everything here is data, kept verbatim. Two printed forms carry
//! typographical slips (a stray `f` symbol and a dropped subscript in the
//! second-order chain equation; a squared factor and a wrong power in the
//! constant coefficient of the depressed third-order form). They are
//! preserved exactly as printed; [`term_diff`] exposes the differences so
//! reconciliation reports them instead of silently correcting.

use crate::chain::LinearODE;
use crate::expr::{add, div, mul, sub, Expr, Rat};
use crate::jet::{JetMono, JetPoly};

fn sym(name: &str) -> Expr {
    Expr::sym(name)
}

fn symd(name: &str, order: u32) -> Expr {
    Expr::symd(name, order)
}

fn third(e: Expr) -> Expr {
    mul(Expr::rational(1, 3), e)
}

fn w_pow(order: u32, exp: u32) -> JetMono {
    let mut m = JetMono::unit();
    for _ in 0..exp {
        m = m.mul(&JetMono::var(order));
    }
    m
}

/// Second-order chain equation exactly as printed:
/// `w'' + (3c f + a2) w' + c a2 w^2 + c^2 w^3 + a w + a0 = 0`,
/// with the stray symbol `f` (in place of `w`) and the unsubscripted `a`
/// (in place of `a1`) kept verbatim.
pub fn chain2_printed(c: &Rat) -> JetPoly {
    let c_expr = Expr::from_rat(c.clone());
    let mut p = JetPoly::zero();
    p.add_term(w_pow(2, 1), Expr::int(1));
    p.add_term(
        w_pow(1, 1),
        add(mul(Expr::int(3), mul(c_expr.clone(), sym("f"))), sym("a2")),
    );
    p.add_term(w_pow(0, 2), mul(c_expr.clone(), sym("a2")));
    p.add_term(w_pow(0, 3), Expr::pow(c_expr, 2));
    p.add_term(w_pow(0, 1), sym("a"));
    p.add_term(JetMono::unit(), sym("a0"));
    p
}

/// [`chain2_printed`] under the reading `f -> w`, `a -> a1`.
pub fn chain2_corrected(c: &Rat) -> JetPoly {
    let c_expr = Expr::from_rat(c.clone());
    let mut p = JetPoly::zero();
    p.add_term(w_pow(2, 1), Expr::int(1));
    p.add_term(w_pow(0, 1).mul(&w_pow(1, 1)), mul(Expr::int(3), c_expr.clone()));
    p.add_term(w_pow(1, 1), sym("a2"));
    p.add_term(w_pow(0, 2), mul(c_expr.clone(), sym("a2")));
    p.add_term(w_pow(0, 3), Expr::pow(c_expr, 2));
    p.add_term(w_pow(0, 1), sym("a1"));
    p.add_term(JetMono::unit(), sym("a0"));
    p
}

/// Third-order chain equation exactly as printed:
/// `w''' + (4c w + a3) w'' + (6c^2 w^2 + 3c a3 w + a2) w' + 3c w'^2
///  + c^3 w^4 + c^2 a3 w^3 + c a2 w^2 + a1 w + a0 = 0`.
pub fn chain3_printed(c: &Rat) -> JetPoly {
    let c_expr = Expr::from_rat(c.clone());
    let mut p = JetPoly::zero();
    p.add_term(w_pow(3, 1), Expr::int(1));
    p.add_term(
        w_pow(0, 1).mul(&w_pow(2, 1)),
        mul(Expr::int(4), c_expr.clone()),
    );
    p.add_term(w_pow(2, 1), sym("a3"));
    p.add_term(
        w_pow(0, 2).mul(&w_pow(1, 1)),
        mul(Expr::int(6), Expr::pow(c_expr.clone(), 2)),
    );
    p.add_term(
        w_pow(0, 1).mul(&w_pow(1, 1)),
        mul(Expr::int(3), mul(c_expr.clone(), sym("a3"))),
    );
    p.add_term(w_pow(1, 1), sym("a2"));
    p.add_term(w_pow(1, 2), mul(Expr::int(3), c_expr.clone()));
    p.add_term(w_pow(0, 4), Expr::pow(c_expr.clone(), 3));
    p.add_term(w_pow(0, 3), mul(Expr::pow(c_expr.clone(), 2), sym("a3")));
    p.add_term(w_pow(0, 2), mul(c_expr, sym("a2")));
    p.add_term(w_pow(0, 1), sym("a1"));
    p.add_term(JetMono::unit(), sym("a0"));
    p
}

/// Printed third-order linear form: `u''' + a2 u'' + a1 u' + c a0 u = 0`.
pub fn linear3_printed(c: &Rat) -> LinearODE {
    LinearODE::new(vec![
        mul(Expr::from_rat(c.clone()), sym("a0")),
        sym("a1"),
        sym("a2"),
    ])
    .unwrap()
}

/// Printed fourth-order linear form:
/// `u'''' + a3 u''' + a2 u'' + a1 u' + c a0 u = 0`. (One printed
/// instance drops the trailing `u` on the constant term; the form
/// recorded here carries it, consistent with the third-order instance
/// and the general statement.)
pub fn linear4_printed(c: &Rat) -> LinearODE {
    LinearODE::new(vec![
        mul(Expr::from_rat(c.clone()), sym("a0")),
        sym("a1"),
        sym("a2"),
        sym("a3"),
    ])
    .unwrap()
}

/// Printed coefficients of the order-3 equation conjugated by
/// `u = exp(Int(m))` before any particular gauge is chosen, lowest
/// derivative first (the subleading entry is the last):
/// `[c a0 + a1 m + a2 (m^2 + m') + m^3 + 3 m m' + m'',
///   a1 + 2 a2 m + 3 m^2 + 3 m', a2 + 3 m]`.
pub fn conjugated3_printed(c: &Rat, m: &Expr) -> [Expr; 3] {
    let m2 = mul(m.clone(), m.clone());
    let m3 = mul(m2.clone(), m.clone());
    let md = crate::expr::differentiate(m);
    let mdd = crate::expr::differentiate(&md);
    [
        add(
            add(
                mul(Expr::from_rat(c.clone()), sym("a0")),
                mul(sym("a1"), m.clone()),
            ),
            add(
                mul(sym("a2"), add(m2.clone(), md.clone())),
                add(m3, add(mul(Expr::int(3), mul(m.clone(), md.clone())), mdd)),
            ),
        ),
        add(
            add(sym("a1"), mul(Expr::int(2), mul(sym("a2"), m.clone()))),
            add(mul(Expr::int(3), m2), mul(Expr::int(3), md)),
        ),
        add(sym("a2"), mul(Expr::int(3), m.clone())),
    ]
}

/// Printed depressed third-order coefficients, lowest derivative first.
/// The constant coefficient is transcribed verbatim with its two slips
/// (`a1 a2^2 / 3` and `-2 a2^2 / 27`); compare [`depressed3_derived_b0`].
pub fn depressed3_printed(c: &Rat) -> [Expr; 2] {
    [
        sub(
            sub(
                sub(
                    mul(Expr::from_rat(c.clone()), sym("a0")),
                    third(mul(sym("a1"), Expr::pow(sym("a2"), 2))),
                ),
                mul(Expr::rational(2, 27), Expr::pow(sym("a2"), 2)),
            ),
            third(symd("a2", 2)),
        ),
        sub(
            sub(sym("a1"), third(Expr::pow(sym("a2"), 2))),
            symd("a2", 1),
        ),
    ]
}

/// Constant coefficient of the depressed third-order equation as the
/// machinery derives it: `c a0 - a1 a2 / 3 + 2 a2^3 / 27 - a2'' / 3`.
pub fn depressed3_derived_b0(c: &Rat) -> Expr {
    sub(
        add(
            sub(
                mul(Expr::from_rat(c.clone()), sym("a0")),
                third(mul(sym("a1"), sym("a2"))),
            ),
            mul(Expr::rational(2, 27), Expr::pow(sym("a2"), 3)),
        ),
        third(symd("a2", 2)),
    )
}

/// Printed depressed fourth-order coefficients, lowest derivative first:
///
/// ```text
/// [c a0 - a1 a3/4 + a2 a3^2/16 - 3 a3^4/256 - a2 a3'/4 + 3 a3^2 a3'/32
///    + 3 a3'^2/16 - a3'''/4,
///  a1 - a2 a3/2 + a3^3/8 - a3'',
///  a2 - 3 a3^2/8 - 3 a3'/2]
/// ```
pub fn depressed4_printed(c: &Rat) -> [Expr; 3] {
    let b0 = [
        mul(Expr::from_rat(c.clone()), sym("a0")),
        mul(Expr::rational(-1, 4), mul(sym("a1"), sym("a3"))),
        mul(Expr::rational(1, 16), mul(sym("a2"), Expr::pow(sym("a3"), 2))),
        mul(Expr::rational(-3, 256), Expr::pow(sym("a3"), 4)),
        mul(Expr::rational(-1, 4), mul(sym("a2"), symd("a3", 1))),
        mul(
            Expr::rational(3, 32),
            mul(Expr::pow(sym("a3"), 2), symd("a3", 1)),
        ),
        mul(Expr::rational(3, 16), Expr::pow(symd("a3", 1), 2)),
        mul(Expr::rational(-1, 4), symd("a3", 3)),
    ]
    .into_iter()
    .reduce(add)
    .unwrap();
    let b1 = sub(
        add(
            sub(sym("a1"), mul(Expr::rational(1, 2), mul(sym("a2"), sym("a3")))),
            mul(Expr::rational(1, 8), Expr::pow(sym("a3"), 3)),
        ),
        symd("a3", 2),
    );
    let b2 = sub(
        sub(sym("a2"), mul(Expr::rational(3, 8), Expr::pow(sym("a3"), 2))),
        mul(Expr::rational(3, 2), symd("a3", 1)),
    );
    [b0, b1, b2]
}

/// The second-order-equation pair the depressed-3 first-derivative
/// coefficient is identified with: `p = 2 a2 / 3`, `q = a1 / 3`.
pub fn ident3_pq() -> (Expr, Expr) {
    (mul(Expr::rational(2, 3), sym("a2")), third(sym("a1")))
}

/// The pair the depressed-4 second-derivative coefficient is identified
/// with: `p = a3 / 2`, `q = a2 / 6`.
pub fn ident4_pq() -> (Expr, Expr) {
    (
        mul(Expr::rational(1, 2), sym("a3")),
        mul(Expr::rational(1, 6), sym("a2")),
    )
}

/// Constraint attached to the order-3 constrained combination:
/// `a1' = 3 c a0`, recorded as the substitution `a0 -> a1' / (3 c)`.
pub fn constrained3_substitution(c: &Rat) -> (&'static str, Expr) {
    ("a0", div(symd("a1", 1), mul(Expr::int(3), Expr::from_rat(c.clone()))))
}

/// The pair printed alongside the order-3 constrained claim: `p = 2 a2 / 3`,
/// `q = a2 / 2`. The derivation instead confirms `q = a1 / 2`; both are
/// recorded.
pub fn constrained3_printed_pq() -> (Expr, Expr) {
    (
        mul(Expr::rational(2, 3), sym("a2")),
        mul(Expr::rational(1, 2), sym("a2")),
    )
}

/// The pair the order-3 constrained combination is actually proportional
/// to: `p = 2 a2 / 3`, `q = a1 / 2`.
pub fn constrained3_derived_pq() -> (Expr, Expr) {
    (
        mul(Expr::rational(2, 3), sym("a2")),
        mul(Expr::rational(1, 2), sym("a1")),
    )
}

/// Constraint attached to the order-4 constrained combination:
/// `a2' = 3 a1 / 2`, recorded as the substitution `a1 -> 2 a2' / 3`.
pub fn constrained4_substitution() -> (&'static str, Expr) {
    ("a1", mul(Expr::rational(2, 3), symd("a2", 1)))
}

/// Target of the order-4 constrained claim: `-a2 + a3^2 / 4 + a3'`.
pub fn constrained4_target() -> Expr {
    add(
        add(
            crate::expr::neg(sym("a2")),
            mul(Expr::rational(1, 4), Expr::pow(sym("a3"), 2)),
        ),
        symd("a3", 1),
    )
}

/// Per-monomial difference `a - b` of two jet polynomials, rendered as
/// `(monomial, coefficient)` pairs highest-order term first (display
/// order). Empty means the polynomials agree exactly.
pub fn term_diff(a: &JetPoly, b: &JetPoly) -> Vec<(String, String)> {
    a.sub(b)
        .terms()
        .rev()
        .map(|(mono, coeff)| (mono.to_string(), crate::expr::normalize(coeff).to_string()))
        .collect()
}
