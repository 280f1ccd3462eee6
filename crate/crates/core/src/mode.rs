use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::AdError;
use crate::expr::{Env, Expr};
use crate::{forward, reverse};

/// The whole-gradient algorithms, in order of increasing efficiency.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GradientMode {
    /// Forward mode with sparse gradient tangents.
    Forward,
    /// Reverse mode, per-node merges.
    RevScalar,
    /// Reverse mode, threaded accumulator.
    RevThreaded,
    /// Reverse mode, dense in-place array.
    RevDense,
}

impl GradientMode {
    pub const ALL: [GradientMode; 4] = [
        GradientMode::Forward,
        GradientMode::RevScalar,
        GradientMode::RevThreaded,
        GradientMode::RevDense,
    ];

    /// Value and dense gradient (one entry per `env` slot).
    pub fn gradient(self, e: &Expr, env: &Env) -> Result<(f64, Vec<f64>), AdError> {
        Ok(match self {
            GradientMode::Forward => {
                let (f, g) = forward::fwd_gradient(e, env)?;
                (f, g.to_dense(env.len()).into_values())
            }
            GradientMode::RevScalar => {
                let (f, g) = reverse::rev_scalar(e, env)?;
                (f, g.to_dense(env.len()).into_values())
            }
            GradientMode::RevThreaded => {
                let (f, g) = reverse::rev_threaded(e, env)?;
                (f, g.to_dense(env.len()).into_values())
            }
            GradientMode::RevDense => {
                let (f, g) = reverse::rev_dense(e, env)?;
                (f, g.into_values())
            }
        })
    }

    /// Short name used on the command line.
    pub fn name(self) -> &'static str {
        match self {
            GradientMode::Forward => "fwd",
            GradientMode::RevScalar => "rev1",
            GradientMode::RevThreaded => "rev2",
            GradientMode::RevDense => "rev",
        }
    }
}

impl fmt::Display for GradientMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown gradient mode `{0}` (expected fwd, rev1, rev2 or rev)")]
pub struct UnknownMode(pub alloc::string::String);

impl FromStr for GradientMode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GradientMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| UnknownMode(s.into()))
    }
}
