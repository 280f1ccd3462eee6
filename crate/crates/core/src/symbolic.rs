//! Naive symbolic differentiation and the derive-then-evaluate reference
//! semantics that every AD mode is checked against.
//!
//! No simplification is performed: `d(x1 * x1)/dx1` is
//! `x1 * 1 + x1 * 1`, exactly as the textbook product rule produces it.
//!
//! For `a^b` the `a^b * log(a) * db` term is only emitted when `b` mentions
//! a variable. The other AD modes make the same distinction, so all of them
//! accept a negative base under a constant integral exponent and all reject
//! a non-positive base under a variable exponent.

use alloc::boxed::Box;

use crate::expr::{eval, Env, EvalError, Expr, VarId};

/// A symbolic dual number: the rebuilt input and its partial derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicDual {
    pub primal: Expr,
    pub tangent: Expr,
}

fn var_indicator(y: VarId, x: VarId) -> Expr {
    Expr::Lit(if y == x { 1.0 } else { 0.0 })
}

/// `∂e/∂x`.
pub fn symb_derive(e: &Expr, x: VarId) -> Expr {
    match e {
        Expr::Lit(_) => Expr::Lit(0.0),
        Expr::Var(y) => var_indicator(*y, x),
        Expr::Add(a, b) => Expr::add(symb_derive(a, x), symb_derive(b, x)),
        Expr::Mul(a, b) => Expr::add(
            Expr::mul((**b).clone(), symb_derive(a, x)),
            Expr::mul((**a).clone(), symb_derive(b, x)),
        ),
        Expr::Neg(a) => chain(Expr::Lit(-1.0), symb_derive(a, x)),
        Expr::Sin(a) => chain(Expr::Cos(a.clone()), symb_derive(a, x)),
        Expr::Cos(a) => chain(Expr::neg(Expr::Sin(a.clone())), symb_derive(a, x)),
        Expr::Exp(a) => chain(Expr::Exp(a.clone()), symb_derive(a, x)),
        Expr::Log(a) => log_rule(symb_derive(a, x), (**a).clone()),
        Expr::Pow(a, b) => {
            let db = b.has_var().then(|| symb_derive(b, x));
            pow_rule((**a).clone(), (**b).clone(), symb_derive(a, x), db)
        }
    }
}

/// `∂e/∂x` together with a reconstruction of `e`.
pub fn symb_dual(e: &Expr, x: VarId) -> SymbolicDual {
    let (primal, tangent) = dual(e, x);
    SymbolicDual { primal, tangent }
}

fn dual(e: &Expr, x: VarId) -> (Expr, Expr) {
    match e {
        Expr::Lit(n) => (Expr::Lit(*n), Expr::Lit(0.0)),
        Expr::Var(y) => (Expr::Var(*y), var_indicator(*y, x)),
        Expr::Add(a, b) => {
            let (f1, df1) = dual(a, x);
            let (f2, df2) = dual(b, x);
            (Expr::add(f1, f2), Expr::add(df1, df2))
        }
        Expr::Mul(a, b) => {
            let (f1, df1) = dual(a, x);
            let (f2, df2) = dual(b, x);
            let df = Expr::add(Expr::mul(f2.clone(), df1), Expr::mul(f1.clone(), df2));
            (Expr::mul(f1, f2), df)
        }
        Expr::Neg(a) => {
            let (f1, df1) = dual(a, x);
            (Expr::neg(f1), chain(Expr::Lit(-1.0), df1))
        }
        Expr::Sin(a) => {
            let (f1, df1) = dual(a, x);
            (Expr::sin(f1.clone()), chain(Expr::cos(f1), df1))
        }
        Expr::Cos(a) => {
            let (f1, df1) = dual(a, x);
            (Expr::cos(f1.clone()), chain(Expr::neg(Expr::sin(f1)), df1))
        }
        Expr::Exp(a) => {
            let (f1, df1) = dual(a, x);
            (Expr::exp(f1.clone()), chain(Expr::exp(f1), df1))
        }
        Expr::Log(a) => {
            let (f1, df1) = dual(a, x);
            (Expr::log(f1.clone()), log_rule(df1, f1))
        }
        Expr::Pow(a, b) => {
            let (f1, df1) = dual(a, x);
            let (f2, df2) = dual(b, x);
            let df2 = b.has_var().then_some(df2);
            (Expr::pow(f1.clone(), f2.clone()), pow_rule(f1, f2, df1, df2))
        }
    }
}

/// `f'(e) * de`.
fn chain(local: Expr, de: Expr) -> Expr {
    Expr::mul(local, de)
}

/// `de * e^-1`.
fn log_rule(de: Expr, e: Expr) -> Expr {
    Expr::mul(de, Expr::pow(e, Expr::Lit(-1.0)))
}

/// `b * a^(b + -1) * da [+ a^b * log(a) * db]`.
fn pow_rule(a: Expr, b: Expr, da: Expr, db: Option<Expr>) -> Expr {
    let base_term = Expr::mul(
        Expr::mul(b.clone(), Expr::pow(a.clone(), Expr::add(b.clone(), Expr::Lit(-1.0)))),
        da,
    );
    match db {
        None => base_term,
        Some(db) => {
            let exponent_term = Expr::mul(
                Expr::mul(Expr::Pow(Box::new(a.clone()), Box::new(b)), Expr::log(a)),
                db,
            );
            Expr::add(base_term, exponent_term)
        }
    }
}

/// Reference semantics: evaluate the symbolic dual at `env`.
pub fn ad_spec(e: &Expr, x: VarId, env: &Env) -> Result<(f64, f64), EvalError> {
    let SymbolicDual { primal, tangent } = symb_dual(e, x);
    Ok((eval(&primal, env)?, eval(&tangent, env)?))
}
