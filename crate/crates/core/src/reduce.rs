//! Gauge transformations of monic linear equations.
//!
//! Writing `u = exp(Int m) v` conjugates a monic order-M equation in `u`
//! into a monic order-M equation in `v`. Derivatives transform through
//! the triangular recurrence
//!
//! ```text
//! u^(k) = exp(Int m) * sum_j c[k][j] v^(j),
//! c[0][0] = 1,   c[k+1][j] = c[k][j-1] + c[k][j]' + m c[k][j]
//! ```
//!
//! Choosing `m = -b_{M-1}/M` (the depressing gauge) cancels the
//! subleading coefficient exactly, the same way completing the cube
//! removes the quadratic term of a cubic.

use crate::chain::LinearODE;
use crate::expr::{add, differentiate, mul, normalize, Expr};
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReduceError {
    #[error("depression needs an equation of order at least 2, got order {0}")]
    OrderTooLow(usize),
}

/// A gauge factor `exp(Int m)`, stored by its logarithmic derivative `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeFactor {
    logderiv: Expr,
}

impl GaugeFactor {
    pub fn new(logderiv: Expr) -> GaugeFactor {
        GaugeFactor { logderiv: normalize(&logderiv) }
    }

    /// The logarithmic derivative `m`.
    pub fn logderiv(&self) -> &Expr {
        &self.logderiv
    }

    /// The factor itself as an expression, `exp(Int(m))`.
    pub fn factor(&self) -> Expr {
        Expr::exp(Expr::integral(self.logderiv.clone()))
    }
}

impl fmt::Display for GaugeFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.factor())
    }
}

/// Conjugates `ode` by the gauge `u = exp(Int m) v`: returns the monic
/// equation satisfied by `v` whenever `u` satisfies `ode`.
pub fn conjugate(ode: &LinearODE, m: &Expr) -> LinearODE {
    let order = ode.order();
    // rows[k][j] is the coefficient of v^(j) in u^(k) / exp(Int m).
    let mut rows: Vec<Vec<Expr>> = vec![vec![Expr::int(1)]];
    for k in 0..order {
        let prev = &rows[k];
        let mut next = Vec::with_capacity(k + 2);
        for j in 0..=k + 1 {
            let shifted = if j >= 1 {
                prev[j - 1].clone()
            } else {
                Expr::int(0)
            };
            let carried = if j <= k {
                add(differentiate(&prev[j]), mul(m.clone(), prev[j].clone()))
            } else {
                Expr::int(0)
            };
            next.push(normalize(&add(shifted, carried)));
        }
        rows.push(next);
    }
    debug_assert!(rows[order][order].is_one(), "conjugation preserves monicity");

    let coeffs = (0..order)
        .map(|j| {
            let mut acc = rows[order][j].clone();
            for (k, row) in rows.iter().enumerate().take(order).skip(j) {
                acc = add(acc, mul(ode.coeff(k).clone(), row[j].clone()));
            }
            normalize(&acc)
        })
        .collect();
    LinearODE::new(coeffs).expect("order preserved")
}

/// The gauge that cancels the subleading coefficient: `m = -b_{M-1}/M`.
pub fn depressing_gauge(ode: &LinearODE) -> Result<GaugeFactor, ReduceError> {
    let order = ode.order();
    if order < 2 {
        return Err(ReduceError::OrderTooLow(order));
    }
    let m = mul(
        Expr::rational(-1, order as i64),
        ode.coeff(order - 1).clone(),
    );
    Ok(GaugeFactor::new(m))
}

/// A depressed equation together with the gauge that produced it and the
/// equation it came from. The subleading coefficient of `reduced` is
/// identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedODE {
    reduced: LinearODE,
    gauge: GaugeFactor,
    source: LinearODE,
}

impl ReducedODE {
    pub fn reduced(&self) -> &LinearODE {
        &self.reduced
    }

    pub fn gauge(&self) -> &GaugeFactor {
        &self.gauge
    }

    pub fn source(&self) -> &LinearODE {
        &self.source
    }
}

/// Depresses `ode` by conjugating with the depressing gauge.
///
/// Panics if the conjugation fails to cancel the subleading coefficient;
/// that cancellation is an algebraic identity, so a failure is a bug in
/// the conjugation, not bad input.
pub fn depress(ode: &LinearODE) -> Result<ReducedODE, ReduceError> {
    let gauge = depressing_gauge(ode)?;
    let reduced = conjugate(ode, gauge.logderiv());
    let subleading = reduced.coeff(ode.order() - 1);
    assert!(
        subleading.is_zero(),
        "depressing gauge failed to cancel the subleading coefficient: {subleading}"
    );
    Ok(ReducedODE { reduced, gauge, source: ode.clone() })
}
