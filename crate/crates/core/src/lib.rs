//! Differentiation of arithmetic expressions, from the naive symbolic
//! specification down to destructive reverse mode.
//!
//! The crate provides one expression language ([`Expr`]) and several ways of
//! computing derivatives over it:
//!
//! | Module        | Entry point                  | Result                          |
//! |---------------|------------------------------|---------------------------------|
//! | [`symbolic`]  | [`symbolic::ad_spec`]        | one partial, via a symbolic AST |
//! | [`forward`]   | [`forward::fwd_partial`]     | one partial, dual numbers       |
//! | [`forward`]   | [`forward::fwd_gradient`]    | whole gradient, sparse tangents |
//! | [`reverse`]   | [`reverse::rev_scalar`]      | whole gradient, per-node merges |
//! | [`reverse`]   | [`reverse::rev_threaded`]    | whole gradient, one accumulator |
//! | [`reverse`]   | [`reverse::rev_dense`]       | whole gradient, in-place array  |
//!
//! The reverse modes run in a single traversal: multipliers whose factors are
//! not yet known are one-shot deferred cells ([`deferred::CellArena`]) that
//! fire registered continuations once their inputs resolve.
//!
//! On top of the differentiation core sit gradient-descent fitting
//! ([`optim`]), a small sum-product loop language fragment ([`spll`]), a
//! Gaussian-mixture and variational-inference case study ([`plp`]) and a
//! seeded random expression generator ([`gen`]).
//!
//! The crate is `no_std` (with `alloc`). The default `std` feature routes the
//! transcendental functions through `std`; without it `libm` is used.
//!
//! ```
//! use adkit_core::{parse, reverse::rev_dense, Env};
//!
//! let e = parse("x1 * x2 + sin(x1)").unwrap();
//! let (value, grad) = rev_dense(&e, &Env::new(vec![3.0, 4.0])).unwrap();
//! assert_eq!(value, 12.0 + 3f64.sin());
//! assert_eq!(grad[1], 4.0 + 3f64.cos());
//! assert_eq!(grad[2], 3.0);
//! ```
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod error;
mod expr;
mod math;
mod text;

pub mod deferred;
pub mod forward;
pub mod gen;
pub mod gradient;
pub mod mode;
pub mod optim;
pub mod plp;
pub mod reverse;
pub mod spll;
pub mod symbolic;

pub use error::AdError;
pub use expr::{eval, Env, EvalError, Expr, VarId};
pub use gradient::{DenseGradient, SparseGradient};
pub use mode::GradientMode;
pub use text::{format, parse, ParseError};

/// Seeded generator used by every sampling routine in the crate.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds the crate's generator from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
