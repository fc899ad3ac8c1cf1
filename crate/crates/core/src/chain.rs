//! The Riccati chain and its linearization.
//!
//! Order `n` of the chain is the nonlinear equation
//!
//! ```text
//! L^n w + sum_{i=1..n} a_i L^{i-1} w + a_0 = 0,    L = d/dx + c w
//! ```
//!
//! in the unknown `w`, with coefficient functions `a_0..a_n` and a nonzero
//! rational constant `c`. Substituting the log-derivative
//! `w = phi'/(c phi)` collapses each `L^k w` to `phi^(k+1)/(c phi)`, so
//! the chain becomes the monic linear equation
//!
//! ```text
//! phi^(n+1) + sum_{i=1..n} a_i phi^(i) + c a_0 phi = 0
//! ```
//!
//! of order `n + 1`; note the constant-term coefficient picks up the
//! factor `c`.

use crate::expr::{mul, normalize, Expr, Rat};
use crate::jet::JetPoly;
use num_traits::Zero;
use std::fmt;

/// Chain orders above this are rejected: expression growth is exponential
/// in `n` and nothing in the verification suite needs more.
pub const MAX_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChainError {
    #[error("chain order must be between 1 and {MAX_ORDER}, got {0}")]
    BadOrder(usize),
    #[error("the shift constant c must be nonzero")]
    ZeroC,
    #[error("expected {expected} coefficients a_0..a_{n} for order {n}, got {got}")]
    CoefficientCount { n: usize, expected: usize, got: usize },
}

/// Parameters of an order-`n` chain: the shift constant `c` and the
/// coefficients `a_0..a_n` (index = subscript).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    n: usize,
    c: Rat,
    alphas: Vec<Expr>,
}

impl ChainParams {
    pub fn new(n: usize, c: Rat, alphas: Vec<Expr>) -> Result<ChainParams, ChainError> {
        if n == 0 || n > MAX_ORDER {
            return Err(ChainError::BadOrder(n));
        }
        if c.is_zero() {
            return Err(ChainError::ZeroC);
        }
        if alphas.len() != n + 1 {
            return Err(ChainError::CoefficientCount {
                n,
                expected: n + 1,
                got: alphas.len(),
            });
        }
        Ok(ChainParams { n, c, alphas })
    }

    /// Parameters with opaque coefficient symbols `a0..an`.
    pub fn opaque(n: usize, c: Rat) -> Result<ChainParams, ChainError> {
        let alphas = (0..=n).map(|i| Expr::sym(&format!("a{i}"))).collect();
        ChainParams::new(n, c, alphas)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> &Rat {
        &self.c
    }

    /// Coefficient `a_i`.
    pub fn alpha(&self, i: usize) -> &Expr {
        &self.alphas[i]
    }

    pub fn alphas(&self) -> &[Expr] {
        &self.alphas
    }
}

/// The chain equation itself: a jet polynomial in `w` whose vanishing is
/// the equation, plus the parameters it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiEq {
    lhs: JetPoly,
    params: ChainParams,
}

impl RiccatiEq {
    pub fn lhs(&self) -> &JetPoly {
        &self.lhs
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }
}

impl fmt::Display for RiccatiEq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = 0", self.lhs)
    }
}

/// Expands the order-`n` chain into an explicit jet polynomial by
/// iterating the shifted derivative operator.
pub fn build_chain(params: &ChainParams) -> RiccatiEq {
    let n = params.n;
    // l_pows[k] = L^k w
    let mut l_pows = Vec::with_capacity(n + 1);
    l_pows.push(JetPoly::var(0));
    for k in 0..n {
        let next = l_pows[k].apply_l(&params.c);
        l_pows.push(next);
    }
    let mut lhs = l_pows[n].clone();
    for i in 1..=n {
        lhs = lhs.add(&l_pows[i - 1].scale(params.alpha(i)));
    }
    lhs = lhs.add(&JetPoly::constant(params.alpha(0).clone()));

    debug_assert_eq!(lhs.max_order(), Some(n as u32));
    debug_assert_eq!(lhs.degree(), Some(n as u32 + 1));
    RiccatiEq { lhs, params: params.clone() }
}

/// Monic linear ordinary differential equation
/// `u^(m) + sum_{k=0..m-1} coeffs[k] u^(k) = 0` of order `m = coeffs.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearODE {
    coeffs: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OdeError {
    #[error("a linear equation needs at least order 1")]
    Empty,
}

impl LinearODE {
    /// `coeffs[k]` multiplies the k-th derivative; the order-`m` leading
    /// coefficient is implicitly 1.
    pub fn new(coeffs: Vec<Expr>) -> Result<LinearODE, OdeError> {
        if coeffs.is_empty() {
            return Err(OdeError::Empty);
        }
        Ok(LinearODE { coeffs })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of the k-th derivative, `k < order`.
    pub fn coeff(&self, k: usize) -> &Expr {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    /// The equation applied to a concrete expression:
    /// `u^(m) + sum coeffs[k] u^(k)`.
    pub fn apply(&self, u: &Expr) -> Expr {
        let mut acc = crate::expr::differentiate_n(u, self.order() as u32);
        for (k, b) in self.coeffs.iter().enumerate() {
            acc = crate::expr::add(
                acc,
                mul(b.clone(), crate::expr::differentiate_n(u, k as u32)),
            );
        }
        acc
    }
}

impl fmt::Display for LinearODE {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.order();
        let var = |k: usize| {
            let mut s = String::from("u");
            s.extend(std::iter::repeat_n('\'', k));
            s
        };
        write!(f, "{}", var(m))?;
        for k in (0..m).rev() {
            let b = &self.coeffs[k];
            if b.is_zero() {
                continue;
            }
            if b.is_one() {
                write!(f, " + {}", var(k))?;
            } else if matches!(b, Expr::Add(..) | Expr::Sub(..) | Expr::Neg(..)) {
                write!(f, " + ({})*{}", b, var(k))?;
            } else {
                write!(f, " + {}*{}", b, var(k))?;
            }
        }
        write!(f, " = 0")
    }
}

/// Linearizes the chain: the substitution `w = phi'/(c phi)` turns the
/// order-`n` chain into this monic linear equation of order `n + 1`. The
/// coefficient of `phi` is `c * a_0`; the higher coefficients carry over
/// unchanged (`b_i = a_i` for `1 <= i <= n`), and all intermediate
/// derivative orders between 1 and n keep their chain coefficients.
pub fn linearize(params: &ChainParams) -> LinearODE {
    let mut coeffs = Vec::with_capacity(params.n + 1);
    coeffs.push(normalize(&mul(
        Expr::from_rat(params.c.clone()),
        params.alpha(0).clone(),
    )));
    for i in 1..=params.n {
        coeffs.push(normalize(params.alpha(i)));
    }
    LinearODE::new(coeffs).expect("order n+1 >= 2")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, rat, rat_int, symbolic_eq};

    #[test]
    fn order_one_is_the_scalar_riccati() {
        // w' + c w^2 + a1 w + a0 = 0
        let params = ChainParams::opaque(1, rat_int(1)).unwrap();
        let eq = build_chain(&params);
        assert_eq!(eq.lhs().to_string(), "w' + w^2 + a1(x)*w + a0(x)");
    }

    #[test]
    fn order_two_expansion() {
        let params = ChainParams::opaque(2, rat_int(1)).unwrap();
        let eq = build_chain(&params);
        assert_eq!(
            eq.lhs().to_string(),
            "w'' + 3*w*w' + a2(x)*w' + w^3 + a2(x)*w^2 + a1(x)*w + a0(x)"
        );
    }

    #[test]
    fn order_two_general_c() {
        use crate::jet::JetMono;
        let c = rat(5, 3);
        let params = ChainParams::opaque(2, c.clone()).unwrap();
        let eq = build_chain(&params);
        let lhs = eq.lhs();
        // Coefficients: 3c on w w', c^2 on w^3, c a2 on w^2.
        let ww1 = JetMono::var(0).mul(&JetMono::var(1));
        let w3 = JetMono::var(0).mul(&JetMono::var(0)).mul(&JetMono::var(0));
        let w2 = JetMono::var(0).mul(&JetMono::var(0));
        assert!(symbolic_eq(lhs.coeff(&ww1).unwrap(), &parse("5").unwrap()));
        assert!(symbolic_eq(lhs.coeff(&w3).unwrap(), &parse("25/9").unwrap()));
        assert!(symbolic_eq(
            lhs.coeff(&w2).unwrap(),
            &parse("5/3*a2(x)").unwrap()
        ));
    }

    #[test]
    fn order_three_expansion() {
        let params = ChainParams::opaque(3, rat_int(1)).unwrap();
        let eq = build_chain(&params);
        assert_eq!(
            eq.lhs().to_string(),
            "w''' + 4*w*w'' + a3(x)*w'' + 6*w^2*w' + 3*w'^2 + 3*a3(x)*w*w' + a2(x)*w' + \
             w^4 + a3(x)*w^3 + a2(x)*w^2 + a1(x)*w + a0(x)"
        );
    }

    #[test]
    fn linearize_scales_constant_term() {
        let params = ChainParams::opaque(2, rat(3, 2)).unwrap();
        let ode = linearize(&params);
        assert_eq!(ode.order(), 3);
        assert!(symbolic_eq(ode.coeff(0), &parse("3/2*a0(x)").unwrap()));
        assert!(symbolic_eq(ode.coeff(1), &parse("a1(x)").unwrap()));
        assert!(symbolic_eq(ode.coeff(2), &parse("a2(x)").unwrap()));
    }

    #[test]
    fn chain_rejects_bad_parameters() {
        assert!(matches!(
            ChainParams::opaque(0, rat_int(1)),
            Err(ChainError::BadOrder(0))
        ));
        assert!(matches!(
            ChainParams::opaque(9, rat_int(1)),
            Err(ChainError::BadOrder(9))
        ));
        assert!(matches!(
            ChainParams::new(1, rat_int(0), vec![Expr::int(0), Expr::int(0)]),
            Err(ChainError::ZeroC)
        ));
        assert!(matches!(
            ChainParams::new(2, rat_int(1), vec![Expr::int(0)]),
            Err(ChainError::CoefficientCount { .. })
        ));
    }

    #[test]
    fn substituted_chain_collapses_to_linear_form() {
        // With w = p'/(c p), the chain lhs times c p equals the linearized
        // lhs applied to p.
        for (n, c) in [(1usize, rat_int(1)), (2, rat_int(2)), (3, rat(1, 2))] {
            let params = ChainParams::opaque(n, c.clone()).unwrap();
            let eq = build_chain(&params);
            let ode = linearize(&params);
            let w = parse("p'(x)/p(x)").unwrap();
            let w = crate::expr::div(w, Expr::from_rat(c.clone()));
            let chain_sub = eq.lhs().substitute(&w);
            let lin = ode.apply(&Expr::sym("p"));
            let scaled = crate::expr::div(
                lin,
                mul(Expr::from_rat(c), Expr::sym("p")),
            );
            assert!(
                symbolic_eq(&chain_sub, &scaled),
                "n = {n} mismatch"
            );
        }
    }
}
