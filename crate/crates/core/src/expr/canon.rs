//! Canonical normal form.
//!
//! An expression is flattened into a fraction of multivariate polynomials
//! over an atom basis: `x`, opaque symbols at each derivative order, and
//! whole function or antiderivative subterms (whose arguments are
//! themselves in normal form). Coefficients are exact rationals. The
//! fraction is reduced by cancelling common monomial content and constant
//! factors and making the denominator monic in its leading monomial; no
//! polynomial gcd is attempted, so equality checks cross-multiply rather
//! than compare fractions structurally.

use super::{add, mul, neg, rat_int, sub, Expr, Func, Rat};
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Atom {
    X,
    Sym { name: String, order: u32 },
    Func(Func, Expr),
    Int(Expr),
}

impl Atom {
    fn render(&self) -> Expr {
        match self {
            Atom::X => Expr::X,
            Atom::Sym { name, order } => Expr::symd(name, *order),
            Atom::Func(f, arg) => Expr::func(*f, arg.clone()),
            Atom::Int(arg) => Expr::integral(arg.clone()),
        }
    }
}

/// Product of atom powers; factors sorted by atom, exponents >= 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Mono {
    factors: Vec<(Atom, u32)>,
}

impl Mono {
    fn unit() -> Mono {
        Mono { factors: Vec::new() }
    }

    fn atom(a: Atom) -> Mono {
        Mono { factors: vec![(a, 1)] }
    }

    fn is_unit(&self) -> bool {
        self.factors.is_empty()
    }

    fn degree(&self) -> u64 {
        self.factors.iter().map(|(_, e)| u64::from(*e)).sum()
    }

    fn mul(&self, other: &Mono) -> Mono {
        let mut out = Vec::with_capacity(self.factors.len() + other.factors.len());
        let mut i = 0;
        let mut j = 0;
        while i < self.factors.len() && j < other.factors.len() {
            match self.factors[i].0.cmp(&other.factors[j].0) {
                Ordering::Less => {
                    out.push(self.factors[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.factors[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let exp = self.factors[i]
                        .1
                        .checked_add(other.factors[j].1)
                        .expect("monomial exponent overflow");
                    out.push((self.factors[i].0.clone(), exp));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.factors[i..]);
        out.extend_from_slice(&other.factors[j..]);
        Mono { factors: out }
    }

    fn pow(&self, k: u32) -> Mono {
        Mono {
            factors: self
                .factors
                .iter()
                .map(|(a, e)| (a.clone(), e.checked_mul(k).expect("monomial exponent overflow")))
                .collect(),
        }
    }

    /// Exponent-wise minimum.
    fn gcd(&self, other: &Mono) -> Mono {
        let mut out = Vec::new();
        let mut i = 0;
        let mut j = 0;
        while i < self.factors.len() && j < other.factors.len() {
            match self.factors[i].0.cmp(&other.factors[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    out.push((
                        self.factors[i].0.clone(),
                        self.factors[i].1.min(other.factors[j].1),
                    ));
                    i += 1;
                    j += 1;
                }
            }
        }
        Mono { factors: out }
    }

    /// Quotient, defined only when `other` divides `self`.
    fn div(&self, other: &Mono) -> Mono {
        let mut out = Vec::new();
        let mut j = 0;
        for (a, e) in &self.factors {
            let mut e = *e;
            if j < other.factors.len() && other.factors[j].0 == *a {
                assert!(other.factors[j].1 <= e, "monomial does not divide");
                e -= other.factors[j].1;
                j += 1;
            }
            if e > 0 {
                out.push((a.clone(), e));
            }
        }
        assert!(j == other.factors.len(), "monomial does not divide");
        Mono { factors: out }
    }

    fn render(&self) -> Option<Expr> {
        let mut acc: Option<Expr> = None;
        for (a, e) in &self.factors {
            let exp = i32::try_from(*e).expect("exponent too large to render");
            let factor = Expr::pow(a.render(), exp);
            acc = Some(match acc {
                None => factor,
                Some(prev) => mul(prev, factor),
            });
        }
        acc
    }
}

/// Graded order: total degree first, then lexicographic on factors.
impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.degree(), &self.factors).cmp(&(other.degree(), &other.factors))
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Polynomial with exact rational coefficients; no zero coefficients kept.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub(crate) struct Poly {
    terms: BTreeMap<Mono, Rat>,
}

impl Poly {
    fn zero() -> Poly {
        Poly::default()
    }

    fn one() -> Poly {
        Poly::constant(rat_int(1))
    }

    fn constant(c: Rat) -> Poly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Mono::unit(), c);
        }
        Poly { terms }
    }

    fn atom(a: Atom) -> Poly {
        let mut terms = BTreeMap::new();
        terms.insert(Mono::atom(a), rat_int(1));
        Poly { terms }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some(c)` when the polynomial is the constant `c` (including 0).
    fn as_constant(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(rat_int(0)),
            1 => {
                let (m, c) = self.terms.iter().next().expect("len checked");
                m.is_unit().then(|| c.clone())
            }
            _ => None,
        }
    }

    fn add_term(&mut self, m: Mono, c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get() + &c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    fn scale(&self, k: &Rat) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    fn pow(&self, k: u32) -> Poly {
        if k == 0 {
            return Poly::one();
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().expect("len checked");
            let mut terms = BTreeMap::new();
            terms.insert(m.pow(k), num_traits::pow::pow(c.clone(), k as usize));
            return Poly { terms };
        }
        let mut base = self.clone();
        let mut acc = Poly::one();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Exponent-wise minimum over all monomials (the monomial content).
    fn content(&self) -> Mono {
        let mut iter = self.terms.keys();
        let first = match iter.next() {
            Some(m) => m.clone(),
            None => return Mono::unit(),
        };
        iter.fold(first, |acc, m| acc.gcd(m))
    }

    fn div_mono(&self, m: &Mono) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(mm, c)| (mm.div(m), c.clone()))
                .collect(),
        }
    }

    fn leading_coeff(&self) -> &Rat {
        self.terms.values().next_back().expect("non-zero polynomial")
    }

    fn render(&self) -> Expr {
        let mut acc: Option<Expr> = None;
        for (m, c) in self.terms.iter().rev() {
            let positive = c.is_positive();
            let mag = c.abs();
            let body = match m.render() {
                None => Expr::Const(mag),
                Some(factors) => {
                    if mag.is_one() {
                        factors
                    } else {
                        mul(Expr::Const(mag), factors)
                    }
                }
            };
            acc = Some(match acc {
                None => {
                    if positive {
                        body
                    } else {
                        neg(body)
                    }
                }
                Some(prev) => {
                    if positive {
                        add(prev, body)
                    } else {
                        sub(prev, body)
                    }
                }
            });
        }
        acc.unwrap_or_else(|| Expr::int(0))
    }
}

/// `Some(k)` when `a == k * b` with `b` non-zero.
fn poly_ratio(a: &Poly, b: &Poly) -> Option<Rat> {
    assert!(!b.is_zero());
    if a.is_zero() {
        return Some(rat_int(0));
    }
    if a.terms.len() != b.terms.len() {
        return None;
    }
    let mut ratio: Option<Rat> = None;
    for ((ma, ca), (mb, cb)) in a.terms.iter().zip(b.terms.iter()) {
        if ma != mb {
            return None;
        }
        let r = ca / cb;
        match &ratio {
            None => ratio = Some(r),
            Some(prev) if *prev == r => {}
            Some(_) => return None,
        }
    }
    ratio
}

/// Normal form: a reduced fraction of polynomials. `den` is the constant 1
/// whenever the expression is polynomial in its atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct CanonForm {
    pub(crate) num: Poly,
    pub(crate) den: Poly,
}

impl CanonForm {
    fn poly(num: Poly) -> CanonForm {
        CanonForm { num, den: Poly::one() }
    }

    pub(crate) fn is_polynomial(&self) -> bool {
        self.den.as_constant().is_some()
    }

    fn render(&self) -> Expr {
        if let Some(c) = self.den.as_constant() {
            assert!(c.is_one(), "reduced form has unit denominator");
            self.num.render()
        } else {
            Expr::Div(Box::new(self.num.render()), Box::new(self.den.render()))
        }
    }
}

fn reduce(num: Poly, den: Poly) -> CanonForm {
    assert!(
        !den.is_zero(),
        "denominator normalizes to zero; the input is outside the expression domain"
    );
    if num.is_zero() {
        return CanonForm::poly(Poly::zero());
    }
    let g = num.content().gcd(&den.content());
    let (num, den) = if g.is_unit() {
        (num, den)
    } else {
        (num.div_mono(&g), den.div_mono(&g))
    };
    if let Some(c) = den.as_constant() {
        return CanonForm::poly(num.scale(&c.recip()));
    }
    if let Some(k) = poly_ratio(&num, &den) {
        return CanonForm::poly(Poly::constant(k));
    }
    let inv = den.leading_coeff().recip();
    CanonForm {
        num: num.scale(&inv),
        den: den.scale(&inv),
    }
}

fn cf_add(a: CanonForm, b: CanonForm) -> CanonForm {
    if a.den == b.den {
        return reduce(a.num.add(&b.num), a.den);
    }
    reduce(
        a.num.mul(&b.den).add(&b.num.mul(&a.den)),
        a.den.mul(&b.den),
    )
}

fn cf_mul(a: CanonForm, b: CanonForm) -> CanonForm {
    reduce(a.num.mul(&b.num), a.den.mul(&b.den))
}

fn cf_neg(a: CanonForm) -> CanonForm {
    CanonForm { num: a.num.neg(), den: a.den }
}

pub(crate) fn canon(e: &Expr) -> CanonForm {
    match e {
        Expr::Const(c) => CanonForm::poly(Poly::constant(c.clone())),
        Expr::X => CanonForm::poly(Poly::atom(Atom::X)),
        Expr::Sym { name, order } => CanonForm::poly(Poly::atom(Atom::Sym {
            name: name.clone(),
            order: *order,
        })),
        Expr::Func(f, arg) => {
            let inner = canon(arg).render();
            CanonForm::poly(Poly::atom(Atom::Func(*f, inner)))
        }
        Expr::Int(arg) => {
            let inner = canon(arg);
            if inner.num.is_zero() {
                return CanonForm::poly(Poly::zero());
            }
            CanonForm::poly(Poly::atom(Atom::Int(inner.render())))
        }
        Expr::Neg(a) => cf_neg(canon(a)),
        Expr::Add(a, b) => cf_add(canon(a), canon(b)),
        Expr::Sub(a, b) => cf_add(canon(a), cf_neg(canon(b))),
        Expr::Mul(a, b) => cf_mul(canon(a), canon(b)),
        Expr::Div(a, b) => {
            let a = canon(a);
            let b = canon(b);
            assert!(
                !b.num.is_zero(),
                "division by an expression whose normal form is zero"
            );
            reduce(a.num.mul(&b.den), a.den.mul(&b.num))
        }
        Expr::Pow(base, k) => {
            let base = canon(base);
            if *k == 0 {
                return CanonForm::poly(Poly::one());
            }
            if *k > 0 {
                reduce(base.num.pow(*k as u32), base.den.pow(*k as u32))
            } else {
                assert!(
                    !base.num.is_zero(),
                    "negative power of an expression whose normal form is zero"
                );
                let k = (-*k) as u32;
                reduce(base.den.pow(k), base.num.pow(k))
            }
        }
    }
}

/// Rewrites `e` into its canonical normal form: terms collected over a
/// deterministic monomial order, exact rational coefficients, common
/// monomial and constant factors cancelled between numerator and
/// denominator, denominator monic.
///
/// Panics if a denominator's normal form is zero (such trees are outside
/// the supported domain).
pub fn normalize(e: &Expr) -> Expr {
    canon(e).render()
}

/// Exact structural equality of normal forms, comparing fractions by
/// cross-multiplication so common polynomial factors cannot hide equality.
pub fn symbolic_eq(a: &Expr, b: &Expr) -> bool {
    let ca = canon(a);
    let cb = canon(b);
    ca.num.mul(&cb.den) == cb.num.mul(&ca.den)
}

/// `Some(k)` when `a == k * b` exactly with `b` not identically zero.
pub fn symbolic_ratio(a: &Expr, b: &Expr) -> Option<Rat> {
    let ca = canon(a);
    let cb = canon(b);
    if cb.num.is_zero() {
        return None;
    }
    let p = ca.num.mul(&cb.den);
    let q = cb.num.mul(&ca.den);
    poly_ratio(&p, &q)
}
