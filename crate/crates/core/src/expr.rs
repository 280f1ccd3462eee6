use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;
use core::num::NonZeroU32;
use core::ops::Index;

use crate::math;

/// Identifier of a model variable, `x1`..`xn`.
///
/// Identifiers are one-based so that they double as positions in an [`Env`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(NonZeroU32);

impl VarId {
    /// Returns `None` for index 0.
    pub fn new(index: u32) -> Option<VarId> {
        NonZeroU32::new(index).map(VarId)
    }

    /// The one-based index.
    pub fn index(self) -> u32 {
        self.0.get()
    }

    /// The zero-based slot in an environment or dense gradient.
    #[inline]
    pub(crate) fn slot(self) -> usize {
        self.0.get() as usize - 1
    }

    pub(crate) fn from_slot(slot: usize) -> VarId {
        VarId::new(slot as u32 + 1).expect("slot + 1 is non-zero")
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Arithmetic expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Lit(f64),
    Var(VarId),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
}

impl Expr {
    /// A literal. Panics on NaN or infinity.
    pub fn lit(value: f64) -> Expr {
        assert!(value.is_finite(), "literal must be finite, got {value}");
        Expr::Lit(value)
    }

    /// Variable `x<index>`. Panics on index 0.
    pub fn var(index: u32) -> Expr {
        Expr::Var(VarId::new(index).expect("variable indices start at 1"))
    }

    pub fn add(lhs: Expr, rhs: Expr) -> Expr {
        Expr::Add(Box::new(lhs), Box::new(rhs))
    }

    pub fn mul(lhs: Expr, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(lhs), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(arg: Expr) -> Expr {
        Expr::Neg(Box::new(arg))
    }

    pub fn sin(arg: Expr) -> Expr {
        Expr::Sin(Box::new(arg))
    }

    pub fn cos(arg: Expr) -> Expr {
        Expr::Cos(Box::new(arg))
    }

    pub fn exp(arg: Expr) -> Expr {
        Expr::Exp(Box::new(arg))
    }

    pub fn log(arg: Expr) -> Expr {
        Expr::Log(Box::new(arg))
    }

    pub fn pow(base: Expr, exponent: Expr) -> Expr {
        Expr::Pow(Box::new(base), Box::new(exponent))
    }

    /// `lhs + (-rhs)`, the desugared form of subtraction.
    pub fn sub(lhs: Expr, rhs: Expr) -> Expr {
        Expr::add(lhs, Expr::neg(rhs))
    }

    /// `lhs * rhs^-1`, the desugared form of division.
    pub fn div(lhs: Expr, rhs: Expr) -> Expr {
        Expr::mul(lhs, Expr::pow(rhs, Expr::Lit(-1.0)))
    }

    /// `arg^0.5`.
    pub fn sqrt(arg: Expr) -> Expr {
        Expr::pow(arg, Expr::Lit(0.5))
    }

    /// Sums `terms` as a balanced tree, keeping the depth logarithmic in the
    /// number of terms. An empty sum is `0`.
    pub fn balanced_sum(mut terms: Vec<Expr>) -> Expr {
        if terms.is_empty() {
            return Expr::Lit(0.0);
        }
        while terms.len() > 1 {
            let mut next = Vec::with_capacity(terms.len().div_ceil(2));
            let mut it = terms.into_iter();
            while let Some(a) = it.next() {
                match it.next() {
                    Some(b) => next.push(Expr::add(a, b)),
                    None => next.push(a),
                }
            }
            terms = next;
        }
        terms.pop().expect("non-empty")
    }

    /// Number of nodes in the tree.
    pub fn node_count(&self) -> usize {
        match self {
            Expr::Lit(_) | Expr::Var(_) => 1,
            Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Pow(a, b) => {
                1 + a.node_count() + b.node_count()
            }
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Log(a) => {
                1 + a.node_count()
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Lit(_) | Expr::Var(_) => 1,
            Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Pow(a, b) => 1 + a.depth().max(b.depth()),
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Log(a) => {
                1 + a.depth()
            }
        }
    }

    /// Largest variable index in the tree, 0 if there are none.
    pub fn max_var(&self) -> u32 {
        match self {
            Expr::Lit(_) => 0,
            Expr::Var(v) => v.index(),
            Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Pow(a, b) => a.max_var().max(b.max_var()),
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Log(a) => {
                a.max_var()
            }
        }
    }

    pub fn has_var(&self) -> bool {
        match self {
            Expr::Lit(_) => false,
            Expr::Var(_) => true,
            Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Pow(a, b) => a.has_var() || b.has_var(),
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Log(a) => {
                a.has_var()
            }
        }
    }

    /// Number of `Var` leaves, counting repeats.
    pub fn var_leaves(&self) -> usize {
        match self {
            Expr::Lit(_) => 0,
            Expr::Var(_) => 1,
            Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Pow(a, b) => a.var_leaves() + b.var_leaves(),
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Log(a) => {
                a.var_leaves()
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::text::write_expr(f, self)
    }
}

/// Dense positional environment: slot `i` holds the value of `x(i+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Env {
    values: Vec<f64>,
}

impl Env {
    /// Panics if any value is NaN or infinite.
    pub fn new(values: Vec<f64>) -> Env {
        Env::try_new(values).expect("environment values must be finite")
    }

    /// Like [`Env::new`], returning the offending position instead of
    /// panicking.
    pub fn try_new(values: Vec<f64>) -> Result<Env, NonFiniteValue> {
        match values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(NonFiniteValue { var: VarId::from_slot(i), value: values[i] }),
            None => Ok(Env { values }),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, var: VarId) -> Option<f64> {
        self.values.get(var.slot()).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub(crate) fn lookup(&self, var: VarId) -> Result<f64, EvalError> {
        self.get(var).ok_or(EvalError::OutOfRange { var, len: self.values.len() })
    }
}

impl Index<VarId> for Env {
    type Output = f64;

    fn index(&self, var: VarId) -> &f64 {
        &self.values[var.slot()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
#[error("{var} has non-finite value {value}")]
pub struct NonFiniteValue {
    pub var: VarId,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("{var} is out of range for an environment of {len} values")]
    OutOfRange { var: VarId, len: usize },
    #[error("{func} is undefined at {arg}")]
    Domain { func: &'static str, arg: f64 },
    #[error("result is not finite")]
    NonFinite,
}

/// Evaluates `e` under `env`.
pub fn eval(e: &Expr, env: &Env) -> Result<f64, EvalError> {
    Ok(match e {
        Expr::Lit(n) => *n,
        Expr::Var(x) => env.lookup(*x)?,
        Expr::Add(a, b) => eval(a, env)? + eval(b, env)?,
        Expr::Mul(a, b) => eval(a, env)? * eval(b, env)?,
        Expr::Neg(a) => -eval(a, env)?,
        Expr::Sin(a) => math::sin(eval(a, env)?),
        Expr::Cos(a) => math::cos(eval(a, env)?),
        Expr::Exp(a) => math::exp(eval(a, env)?),
        Expr::Log(a) => math::ln(eval(a, env)?)?,
        Expr::Pow(a, b) => {
            let base = eval(a, env)?;
            math::pow(base, eval(b, env)?)?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn env(v: &[f64]) -> Env {
        Env::new(v.to_vec())
    }

    #[test]
    fn hand_arithmetic() {
        let e = Expr::mul(Expr::add(Expr::var(1), Expr::lit(2.0)), Expr::var(2));
        assert_eq!(eval(&e, &env(&[3.0, 4.0])), Ok(20.0));
        assert_eq!(eval(&Expr::lit(7.0), &env(&[])), Ok(7.0));
    }

    #[test]
    fn exp_log_inverse() {
        let e = Expr::exp(Expr::log(Expr::var(1)));
        let v = eval(&e, &env(&[2.5])).unwrap();
        assert!((v - 2.5).abs() <= 1e-12);
    }

    #[test]
    fn out_of_range_variable() {
        let err = eval(&Expr::var(3), &env(&[1.0, 2.0])).unwrap_err();
        assert_eq!(err, EvalError::OutOfRange { var: VarId::new(3).unwrap(), len: 2 });
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            eval(&Expr::log(Expr::lit(0.0)), &env(&[])),
            Err(EvalError::Domain { func: "log", .. })
        ));
        assert!(matches!(
            eval(&Expr::pow(Expr::lit(-2.0), Expr::lit(0.5)), &env(&[])),
            Err(EvalError::Domain { func: "pow", .. })
        ));
        assert!(eval(&Expr::div(Expr::lit(1.0), Expr::lit(0.0)), &env(&[])).is_err());
        // Negative base with an integral exponent is fine.
        assert_eq!(eval(&Expr::pow(Expr::lit(-2.0), Expr::lit(3.0)), &env(&[])), Ok(-8.0));
    }

    #[test]
    fn balanced_sum_depth() {
        let terms = (1..=1000).map(|i| Expr::lit(i as f64)).collect();
        let e = Expr::balanced_sum(terms);
        assert_eq!(eval(&e, &env(&[])), Ok(500500.0));
        assert!(e.depth() <= 11);
        assert_eq!(Expr::balanced_sum(vec![]), Expr::Lit(0.0));
    }

    #[test]
    fn non_finite_env_rejected() {
        let err = Env::try_new(vec![1.0, f64::NAN]).unwrap_err();
        assert_eq!(err.var, VarId::new(2).unwrap());
    }

    #[test]
    fn var_zero_rejected() {
        assert!(VarId::new(0).is_none());
    }
}
