//! Scalar functions shared by every evaluator, so all modes agree bitwise on
//! primal values.

use crate::expr::EvalError;

#[cfg(feature = "std")]
mod imp {
    // The argument goes through `black_box` so that a `sin` and a `cos` of
    // the same value are never fused into one `sincos` call, whose results
    // can differ in the last bit from separate calls.
    #[inline]
    pub fn sin(x: f64) -> f64 {
        core::hint::black_box(x).sin()
    }
    #[inline]
    pub fn cos(x: f64) -> f64 {
        core::hint::black_box(x).cos()
    }
    #[inline]
    pub fn exp(x: f64) -> f64 {
        x.exp()
    }
    #[inline]
    pub fn ln(x: f64) -> f64 {
        x.ln()
    }
    #[inline]
    pub fn powf(x: f64, y: f64) -> f64 {
        x.powf(y)
    }
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    #[inline]
    pub fn trunc(x: f64) -> f64 {
        x.trunc()
    }
}

#[cfg(not(feature = "std"))]
mod imp {
    pub use libm::{cos, exp, log as ln, pow as powf, sin, sqrt, trunc};
}

pub(crate) use imp::{cos, exp, sin, sqrt};

/// Natural logarithm, rejecting non-positive arguments.
#[inline]
pub(crate) fn ln(x: f64) -> Result<f64, EvalError> {
    if x > 0.0 {
        Ok(imp::ln(x))
    } else {
        Err(EvalError::Domain { func: "log", arg: x })
    }
}

/// `base^exponent` over the reals.
///
/// A negative base needs an integral exponent, and a zero base needs a
/// non-negative one.
#[inline]
pub(crate) fn pow(base: f64, exponent: f64) -> Result<f64, EvalError> {
    if base < 0.0 && imp::trunc(exponent) != exponent {
        return Err(EvalError::Domain { func: "pow", arg: base });
    }
    if base == 0.0 && exponent < 0.0 {
        return Err(EvalError::Domain { func: "pow", arg: base });
    }
    Ok(imp::powf(base, exponent))
}
