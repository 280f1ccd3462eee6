use crate::deferred::CellError;
use crate::expr::EvalError;

/// Failure of a gradient computation.
#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum AdError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    /// Broken deferred-cell bookkeeping in a reverse traversal. Never
    /// expected; indicates a bug rather than bad input.
    #[error("internal error: {0}")]
    Cell(#[from] CellError),
}
