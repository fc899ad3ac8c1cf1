//! Polynomials in an unknown function and its derivatives.
//!
//! A [`JetPoly`] is a polynomial in the jet variables `w, w', w'', ...`
//! with [`Expr`] coefficients. This is the shape of a Riccati-chain left
//! hand side: applying the total derivative or the shifted derivative
//! operator stays inside the class. Monomials are ordered by highest
//! derivative order, then total degree, then factor list, which is the
//! order terms print in (highest first).

use crate::exec::{self, Parallelism};
use crate::expr::{
    self, differentiate, evaluate_with, normalize, EvalError, EvalOptions, Expr, Rat, SymbolTable,
};
use crate::grid::GridFn;
use num_traits::Signed;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

/// Product of jet-variable powers: sorted `(derivative order, exponent)`
/// pairs with exponents >= 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct JetMono {
    factors: Vec<(u32, u32)>,
}

impl JetMono {
    pub fn unit() -> JetMono {
        JetMono { factors: Vec::new() }
    }

    /// The single variable `w^(order)`.
    pub fn var(order: u32) -> JetMono {
        JetMono { factors: vec![(order, 1)] }
    }

    pub fn is_unit(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|(_, e)| e).sum()
    }

    pub fn max_order(&self) -> Option<u32> {
        self.factors.last().map(|(k, _)| *k)
    }

    pub fn factors(&self) -> &[(u32, u32)] {
        &self.factors
    }

    pub fn mul(&self, other: &JetMono) -> JetMono {
        let mut out = Vec::with_capacity(self.factors.len() + other.factors.len());
        let mut i = 0;
        let mut j = 0;
        while i < self.factors.len() && j < other.factors.len() {
            match self.factors[i].0.cmp(&other.factors[j].0) {
                Ordering::Less => {
                    out.push(self.factors[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.factors[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.factors[i].0, self.factors[i].1 + other.factors[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.factors[i..]);
        out.extend_from_slice(&other.factors[j..]);
        JetMono { factors: out }
    }

    /// Monomials produced by differentiating this one: for each factor
    /// `w^(k)^e`, the term `e * (mono / w^(k)) * w^(k+1)`.
    fn derivative_terms(&self) -> Vec<(u32, JetMono)> {
        let mut out = Vec::with_capacity(self.factors.len());
        for (idx, (k, e)) in self.factors.iter().enumerate() {
            let mut factors: Vec<(u32, u32)> = Vec::with_capacity(self.factors.len() + 1);
            for (j, f) in self.factors.iter().enumerate() {
                if j == idx {
                    if f.1 > 1 {
                        factors.push((f.0, f.1 - 1));
                    }
                } else {
                    factors.push(*f);
                }
            }
            let bumped = JetMono { factors }.mul(&JetMono::var(k + 1));
            out.push((*e, bumped));
        }
        out
    }
}

/// Highest derivative order first, then total degree, then factors.
impl Ord for JetMono {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.max_order(), self.degree(), &self.factors).cmp(&(
            other.max_order(),
            other.degree(),
            &other.factors,
        ))
    }
}

impl PartialOrd for JetMono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for JetMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (i, (k, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "w")?;
            for _ in 0..*k {
                write!(f, "'")?;
            }
            if *e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// Polynomial in the jet variables with symbolic coefficients, kept in
/// normal form (coefficients normalized, zero coefficients dropped).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct JetPoly {
    terms: BTreeMap<JetMono, Expr>,
}

impl JetPoly {
    pub fn zero() -> JetPoly {
        JetPoly::default()
    }

    pub fn constant(e: Expr) -> JetPoly {
        let mut p = JetPoly::zero();
        p.add_term(JetMono::unit(), e);
        p
    }

    /// The bare jet variable `w^(order)`.
    pub fn var(order: u32) -> JetPoly {
        let mut p = JetPoly::zero();
        p.add_term(JetMono::var(order), Expr::int(1));
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&JetMono, &Expr)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mono: &JetMono) -> Option<&Expr> {
        self.terms.get(mono)
    }

    /// Highest derivative order appearing, if any variable appears.
    pub fn max_order(&self) -> Option<u32> {
        self.terms.keys().filter_map(JetMono::max_order).max()
    }

    /// Highest total degree in the jet variables.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(JetMono::degree).max()
    }

    pub fn add_term(&mut self, mono: JetMono, coeff: Expr) {
        let coeff = normalize(&coeff);
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = normalize(&(o.get() + &coeff));
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &JetPoly) -> JetPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> JetPoly {
        JetPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), normalize(&-c)))
                .collect(),
        }
    }

    pub fn sub(&self, other: &JetPoly) -> JetPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &JetPoly) -> JetPoly {
        let mut out = JetPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, k: &Expr) -> JetPoly {
        let mut out = JetPoly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), k * c);
        }
        out
    }

    /// Total derivative with respect to `x`: coefficients differentiate as
    /// expressions, jet variables bump their order through the product
    /// rule.
    pub fn total_derivative(&self) -> JetPoly {
        let mut out = JetPoly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), differentiate(c));
            for (mult, bumped) in m.derivative_terms() {
                out.add_term(bumped, expr::mul(Expr::int(i64::from(mult)), c.clone()));
            }
        }
        out
    }

    /// One application of the shifted derivative operator: `d/dx + c w`.
    pub fn apply_l(&self, c: &Rat) -> JetPoly {
        self.total_derivative()
            .add(&self.mul(&JetPoly::var(0)).scale(&Expr::from_rat(c.clone())))
    }

    /// Substitutes a concrete expression for `w`, producing the expression
    /// obtained by replacing each jet variable with the corresponding
    /// derivative of `w`.
    pub fn substitute(&self, w: &Expr) -> Expr {
        let max = self.max_order().unwrap_or(0);
        let mut derivs = Vec::with_capacity(max as usize + 1);
        derivs.push(w.clone());
        for k in 0..max {
            let next = differentiate(&derivs[k as usize]);
            derivs.push(next);
        }
        let mut acc = Expr::int(0);
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (k, e) in m.factors() {
                term = expr::mul(term, Expr::pow(derivs[*k as usize].clone(), *e as i32));
            }
            acc = expr::add(acc, term);
        }
        acc
    }

    /// Evaluates at a point given jet-variable values: `jets[k]` is the
    /// value of the k-th derivative of the unknown at `x`.
    pub fn eval(
        &self,
        x: f64,
        jets: &[f64],
        table: &SymbolTable,
        opts: EvalOptions,
    ) -> Result<f64, EvalError> {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut term = evaluate_with(c, x, table, opts)?;
            for (k, e) in m.factors() {
                let v = *jets
                    .get(*k as usize)
                    .expect("jet values cover the polynomial's max order");
                term *= v.powi(*e as i32);
            }
            acc += term;
        }
        Ok(acc)
    }
}

fn coeff_needs_parens(e: &Expr) -> bool {
    match e {
        Expr::Add(..) | Expr::Sub(..) | Expr::Neg(..) => true,
        Expr::Const(c) => c.is_negative(),
        _ => false,
    }
}

impl fmt::Display for JetPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if m.is_unit() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{m}")?;
            } else if coeff_needs_parens(c) {
                write!(f, "({c})*{m}")?;
            } else {
                write!(f, "{c}*{m}")?;
            }
        }
        Ok(())
    }
}

/// Result of checking a jet polynomial against a sampled function via the
/// log-derivative substitution.
#[derive(Debug, Clone, PartialEq)]
pub struct ColeHopfReport {
    /// Largest |residual| over the checked interior nodes.
    pub max_residual: f64,
    /// Node location where the largest residual occurred.
    pub worst_x: f64,
    /// Interior nodes actually evaluated.
    pub nodes_checked: usize,
    /// Interior nodes skipped because a stencil touched a masked node.
    pub nodes_masked: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ColeHopfError {
    #[error("phi vanishes or changes sign at node {index} (x = {x}); the log-derivative substitution needs a single-signed phi")]
    SignChange { index: usize, x: f64 },
    #[error("no finite-difference stencil for jet order {order} (supported up to 3)")]
    StencilOrder { order: u32 },
    #[error("grid too short for the stencil margin: need more than {need} nodes, got {got}")]
    TooShort { need: usize, got: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Nodes where |phi| falls below this fraction of max|phi| are masked out
/// of the residual scan, along with any stencil touching them: the
/// quotient phi'/(c phi) loses precision as phi shrinks.
pub const MASK_FLOOR: f64 = 1e-6;

/// Evaluates `lhs` (a polynomial in `w` and derivatives) along
/// `w = phi'/(c phi)` for a sampled `phi`, using central finite
/// differences for the jet values, and reports the largest residual over
/// the interior nodes.
///
/// `phi` must be single-signed on the grid. If the grid carries exact
/// derivative samples they seed `w` directly; otherwise `phi'` is taken by
/// central differences too. Jet orders up to 3 are supported.
pub fn cole_hopf_check(
    lhs: &JetPoly,
    c: &Rat,
    phi: &GridFn,
    table: &SymbolTable,
    opts: EvalOptions,
    par: Parallelism,
) -> Result<ColeHopfReport, ColeHopfError> {
    let n = phi.len();
    let values = phi.values();
    let sign = values[0].signum();
    for (index, v) in values.iter().enumerate() {
        if *v == 0.0 || v.signum() != sign {
            return Err(ColeHopfError::SignChange { index, x: phi.x(index) });
        }
    }
    let order = lhs.max_order().unwrap_or(0);
    if order > 3 {
        return Err(ColeHopfError::StencilOrder { order });
    }

    let c_f = crate::expr::evaluate(&Expr::from_rat(c.clone()), 0.0, &SymbolTable::new())?;
    let h = phi.step();
    let w: Vec<f64> = match phi.derivs() {
        Some(d) => values.iter().zip(d).map(|(v, dv)| dv / (c_f * v)).collect(),
        None => {
            // Central difference for phi' costs one node of margin on each
            // side; endpoints get a placeholder never read by the scan.
            let mut w = vec![0.0; n];
            for i in 1..n - 1 {
                w[i] = (values[i + 1] - values[i - 1]) / (2.0 * h) / (c_f * values[i]);
            }
            w
        }
    };
    let phi_margin = usize::from(phi.derivs().is_none());
    // Widest jet stencil: order 2 needs +-1 node, order 3 needs +-2.
    let jet_margin = match order {
        0 | 1 => 1,
        2 => 1,
        _ => 2,
    };
    let margin = jet_margin + phi_margin;
    if n <= 2 * margin {
        return Err(ColeHopfError::TooShort { need: 2 * margin, got: n });
    }

    let floor = MASK_FLOOR * phi.max_abs();
    let masked: Vec<bool> = values.iter().map(|v| v.abs() < floor).collect();

    let results = exec::map_indexed(par, n - 2 * margin, |idx| {
        let i = idx + margin;
        if masked[i - margin..=i + margin].iter().any(|m| *m) {
            return Ok(None);
        }
        let mut jets = [0.0; 4];
        jets[0] = w[i];
        if order >= 1 {
            jets[1] = (w[i + 1] - w[i - 1]) / (2.0 * h);
        }
        if order >= 2 {
            jets[2] = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (h * h);
        }
        if order >= 3 {
            jets[3] =
                (w[i + 2] - 2.0 * w[i + 1] + 2.0 * w[i - 1] - w[i - 2]) / (2.0 * h * h * h);
        }
        let x = phi.x(i);
        match lhs.eval(x, &jets[..=order as usize], table, opts) {
            Ok(v) => Ok(Some((v.abs(), x))),
            Err(e) => Err(e),
        }
    });

    let mut max_residual = 0.0_f64;
    let mut worst_x = phi.x(margin);
    let mut nodes_checked = 0;
    let mut nodes_masked = 0;
    for r in results {
        match r? {
            None => nodes_masked += 1,
            Some((res, x)) => {
                nodes_checked += 1;
                if res > max_residual {
                    max_residual = res;
                    worst_x = x;
                }
            }
        }
    }
    Ok(ColeHopfReport { max_residual, worst_x, nodes_checked, nodes_masked })
}
