//! Forward-mode AD: one partial per traversal with scalar dual numbers, or
//! the whole gradient per traversal with sparse-map tangents.

use crate::expr::{Env, EvalError, Expr, VarId};
use crate::gradient::SparseGradient;
use crate::math;

/// Primal value and tangent (one partial derivative) at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub primal: f64,
    pub tangent: f64,
}

impl Dual {
    pub fn new(primal: f64, tangent: f64) -> Self {
        Dual { primal, tangent }
    }
}

/// Local partials of `base^exponent`. The exponent partial is only computed
/// when the exponent mentions a variable; otherwise it is reported as 0 and
/// no logarithm is taken.
#[inline]
pub(crate) fn pow_partials(
    base: f64,
    exponent: f64,
    exponent_has_var: bool,
) -> Result<(f64, f64), EvalError> {
    let d_base = exponent * math::pow(base, exponent - 1.0)?;
    let d_exponent = if exponent_has_var {
        math::pow(base, exponent)? * math::ln(base)?
    } else {
        0.0
    };
    Ok((d_base, d_exponent))
}

/// Primal and local derivative of a one-argument primitive at `arg`.
#[inline]
pub(crate) fn unary(e: &Expr, arg: f64) -> Result<(f64, f64), EvalError> {
    Ok(match e {
        Expr::Neg(_) => (-arg, -1.0),
        Expr::Sin(_) => (math::sin(arg), math::cos(arg)),
        Expr::Cos(_) => (math::cos(arg), -math::sin(arg)),
        Expr::Exp(_) => {
            let f = math::exp(arg);
            (f, f)
        }
        Expr::Log(_) => (math::ln(arg)?, 1.0 / arg),
        _ => unreachable!("not a unary node"),
    })
}

/// `∂e/∂x` and `e` at `env` in one pass.
///
/// Fails with [`EvalError::NonFinite`] on overflow.
pub fn fwd_partial(e: &Expr, x: VarId, env: &Env) -> Result<Dual, EvalError> {
    let (d, _) = partial(e, x, env)?;
    if !(d.primal.is_finite() && d.tangent.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    Ok(d)
}

fn partial(e: &Expr, x: VarId, env: &Env) -> Result<(Dual, bool), EvalError> {
    Ok(match e {
        Expr::Lit(n) => (Dual::new(*n, 0.0), false),
        Expr::Var(y) => {
            let f = env.lookup(*y)?;
            (Dual::new(f, if *y == x { 1.0 } else { 0.0 }), true)
        }
        Expr::Add(a, b) => {
            let (d1, v1) = partial(a, x, env)?;
            let (d2, v2) = partial(b, x, env)?;
            (Dual::new(d1.primal + d2.primal, d1.tangent + d2.tangent), v1 || v2)
        }
        Expr::Mul(a, b) => {
            let (d1, v1) = partial(a, x, env)?;
            let (d2, v2) = partial(b, x, env)?;
            let df = d2.primal * d1.tangent + d1.primal * d2.tangent;
            (Dual::new(d1.primal * d2.primal, df), v1 || v2)
        }
        Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Log(a) => {
            let (d1, v1) = partial(a, x, env)?;
            let (f, local) = unary(e, d1.primal)?;
            (Dual::new(f, local * d1.tangent), v1)
        }
        Expr::Pow(a, b) => {
            let (d1, v1) = partial(a, x, env)?;
            let (d2, v2) = partial(b, x, env)?;
            let f = math::pow(d1.primal, d2.primal)?;
            let (p1, p2) = pow_partials(d1.primal, d2.primal, v2)?;
            let df = if v2 { p1 * d1.tangent + p2 * d2.tangent } else { p1 * d1.tangent };
            (Dual::new(f, df), v1 || v2)
        }
    })
}

/// `e` and its whole gradient at `env` in one pass. Absent entries are zero.
pub fn fwd_gradient(e: &Expr, env: &Env) -> Result<(f64, SparseGradient), EvalError> {
    let (f, g, _) = gradient(e, env)?;
    Ok((f, g))
}

fn plus(a: f64, b: f64) -> f64 {
    a + b
}

fn gradient(e: &Expr, env: &Env) -> Result<(f64, SparseGradient, bool), EvalError> {
    Ok(match e {
        Expr::Lit(n) => (*n, SparseGradient::new(), false),
        Expr::Var(y) => (env.lookup(*y)?, SparseGradient::singleton(*y, 1.0), true),
        Expr::Add(a, b) => {
            let (f1, g1, v1) = gradient(a, env)?;
            let (f2, g2, v2) = gradient(b, env)?;
            (f1 + f2, SparseGradient::merge(plus, g1, g2), v1 || v2)
        }
        Expr::Mul(a, b) => {
            let (f1, g1, v1) = gradient(a, env)?;
            let (f2, g2, v2) = gradient(b, env)?;
            let g = SparseGradient::merge(
                plus,
                SparseGradient::scale(f2, g1),
                SparseGradient::scale(f1, g2),
            );
            (f1 * f2, g, v1 || v2)
        }
        Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Log(a) => {
            let (f1, g1, v1) = gradient(a, env)?;
            let (f, local) = unary(e, f1)?;
            (f, SparseGradient::scale(local, g1), v1)
        }
        Expr::Pow(a, b) => {
            let (f1, g1, v1) = gradient(a, env)?;
            let (f2, g2, v2) = gradient(b, env)?;
            let f = math::pow(f1, f2)?;
            let (p1, p2) = pow_partials(f1, f2, v2)?;
            let g = if v2 {
                SparseGradient::merge(
                    plus,
                    SparseGradient::scale(p1, g1),
                    SparseGradient::scale(p2, g2),
                )
            } else {
                SparseGradient::scale(p1, g1)
            };
            (f, g, v1 || v2)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: u32) -> VarId {
        VarId::new(i).unwrap()
    }

    fn env(v: &[f64]) -> Env {
        Env::new(v.to_vec())
    }

    #[test]
    fn partial_examples() {
        let e = Expr::mul(Expr::var(1), Expr::var(2));
        assert_eq!(fwd_partial(&e, x(1), &env(&[3.0, 4.0])), Ok(Dual::new(12.0, 4.0)));
        assert_eq!(fwd_partial(&Expr::var(2), x(1), &env(&[5.0, 6.0])), Ok(Dual::new(6.0, 0.0)));
    }

    #[test]
    fn gradient_examples() {
        let e = Expr::mul(Expr::var(1), Expr::var(2));
        let (f, g) = fwd_gradient(&e, &env(&[3.0, 4.0])).unwrap();
        assert_eq!(f, 12.0);
        assert_eq!(g, [(x(1), 4.0), (x(2), 3.0)].into_iter().collect());

        let (f, g) = fwd_gradient(&Expr::lit(3.0), &env(&[1.0, 1.0])).unwrap();
        assert_eq!(f, 3.0);
        assert!(g.is_empty());

        let (f, g) = fwd_gradient(&Expr::add(Expr::var(1), Expr::var(1)), &env(&[2.0])).unwrap();
        assert_eq!(f, 4.0);
        assert_eq!(g, SparseGradient::singleton(x(1), 2.0));
    }

    #[test]
    fn extended_rules() {
        let e = crate::parse("sin(x1) * exp(x2) + log(x1) - cos(x2) + x1^x2").unwrap();
        let (a, b) = (0.7, 1.3);
        let (_, g) = fwd_gradient(&e, &env(&[a, b])).unwrap();
        let d1 = a.cos() * b.exp() + 1.0 / a + b * a.powf(b - 1.0);
        let d2 = a.sin() * b.exp() + b.sin() + a.powf(b) * a.ln();
        assert!((g.get(x(1)) - d1).abs() < 1e-12);
        assert!((g.get(x(2)) - d2).abs() < 1e-12);
        let p = fwd_partial(&e, x(2), &env(&[a, b])).unwrap();
        assert!((p.tangent - d2).abs() < 1e-12);
    }

    #[test]
    fn errors_propagate() {
        assert!(fwd_gradient(&Expr::var(2), &env(&[1.0])).is_err());
        assert!(fwd_partial(&Expr::log(Expr::var(1)), x(1), &env(&[-1.0])).is_err());
        let e = Expr::pow(Expr::var(1), Expr::var(2));
        assert!(fwd_gradient(&e, &env(&[0.0, 2.0])).is_err());
    }
}
