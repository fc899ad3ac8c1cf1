//! Canonical text form. The printer emits exactly the grammar the parser
//! accepts, with minimal parentheses: parenthesization is driven by
//! operator precedence, so `parse(print(e))` reproduces `e` for any tree
//! the rest of the crate builds.

use super::{fmt_rat, Expr};
use num_traits::Signed;
use std::fmt;

/// Precedence levels: 1 additive (and leading minus), 2 multiplicative,
/// 3 power, 4 atoms. A negative or fractional constant prints with an
/// operator in it and takes the corresponding level.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) | Expr::Neg(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Pow(..) => 3,
        Expr::Const(c) => {
            if c.is_negative() {
                1
            } else if c.denom() == &num_bigint::BigInt::from(1) {
                4
            } else {
                2
            }
        }
        Expr::X | Expr::Sym { .. } | Expr::Func(..) | Expr::Int(..) => 4,
    }
}

fn fmt_at(e: &Expr, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if prec(e) < min_prec {
        write!(f, "(")?;
        fmt_at(e, 0, f)?;
        return write!(f, ")");
    }
    match e {
        Expr::Const(c) => write!(f, "{}", fmt_rat(c)),
        Expr::X => write!(f, "x"),
        Expr::Sym { name, order } => {
            write!(f, "{}", name)?;
            for _ in 0..*order {
                write!(f, "'")?;
            }
            write!(f, "(x)")
        }
        Expr::Func(func, arg) => {
            write!(f, "{}(", func.name())?;
            fmt_at(arg, 0, f)?;
            write!(f, ")")
        }
        Expr::Int(arg) => {
            write!(f, "Int(")?;
            fmt_at(arg, 0, f)?;
            write!(f, ")")
        }
        Expr::Neg(a) => {
            write!(f, "-")?;
            fmt_at(a, 2, f)
        }
        Expr::Add(a, b) => {
            fmt_at(a, 1, f)?;
            write!(f, " + ")?;
            fmt_at(b, 2, f)
        }
        Expr::Sub(a, b) => {
            fmt_at(a, 1, f)?;
            write!(f, " - ")?;
            fmt_at(b, 2, f)
        }
        Expr::Mul(a, b) => {
            fmt_at(a, 2, f)?;
            write!(f, "*")?;
            fmt_at(b, 3, f)
        }
        Expr::Div(a, b) => {
            fmt_at(a, 2, f)?;
            write!(f, "/")?;
            fmt_at(b, 3, f)
        }
        Expr::Pow(base, k) => {
            fmt_at(base, 4, f)?;
            write!(f, "^{}", k)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_at(self, 0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;

    #[test]
    fn minimal_parentheses() {
        let e = mul(
            add(Expr::x(), Expr::int(1)),
            sub(Expr::x(), Expr::int(2)),
        );
        assert_eq!(e.to_string(), "(x + 1)*(x - 2)");
    }

    #[test]
    fn no_parens_for_precedence_order() {
        let e = add(
            mul(Expr::int(3), Expr::pow(Expr::x(), 2)),
            Expr::sym("p"),
        );
        assert_eq!(e.to_string(), "3*x^2 + p(x)");
    }

    #[test]
    fn symbol_orders_print_as_primes() {
        assert_eq!(Expr::symd("a2", 3).to_string(), "a2'''(x)");
    }

    #[test]
    fn negative_and_fractional_constants_guard_context() {
        let e = mul(Expr::x(), Expr::rational(-2, 1));
        assert_eq!(e.to_string(), "x*(-2)");
        let e = Expr::Pow(Box::new(Expr::rational(2, 3)), 2);
        assert_eq!(e.to_string(), "(2/3)^2");
        let e = mul(Expr::rational(2, 3), Expr::x());
        assert_eq!(e.to_string(), "2/3*x");
    }

    #[test]
    fn subtraction_groups_right_operand() {
        let e = sub(Expr::x(), add(Expr::sym("p"), Expr::int(1)));
        assert_eq!(e.to_string(), "x - (p(x) + 1)");
    }

    #[test]
    fn nested_functions_and_integrals() {
        let e = Expr::exp(neg(mul(
            Expr::rational(1, 3),
            Expr::integral(Expr::sym("a2")),
        )));
        assert_eq!(e.to_string(), "exp(-1/3*Int(a2(x)))");
        // A literal negative coefficient needs parentheses to round-trip.
        let e = mul(Expr::rational(-1, 3), Expr::integral(Expr::sym("a2")));
        assert_eq!(e.to_string(), "(-1/3)*Int(a2(x))");
    }
}
