//! Plain gradient descent on expression-valued objectives.
//!
//! The update is `θ ← θ - λ∇L(θ)` with no momentum, clipping or line search.
//! Maximization is descent on the negated objective.

use alloc::vec::Vec;

use crate::error::AdError;
use crate::expr::{eval, Env, Expr};
use crate::mode::GradientMode;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitConfig {
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Stop once the max-norm of the applied update is at most this. Zero
    /// runs the full iteration budget unless the update vanishes exactly.
    pub convergence_tolerance: f64,
    pub gradient_mode: GradientMode,
}

impl FitConfig {
    /// Panics unless `learning_rate > 0`, `max_iterations >= 1` and the
    /// tolerance is non-negative.
    pub fn new(learning_rate: f64, max_iterations: usize, convergence_tolerance: f64) -> Self {
        assert!(learning_rate > 0.0 && learning_rate.is_finite(), "learning rate must be positive");
        assert!(max_iterations >= 1, "at least one iteration is required");
        assert!(convergence_tolerance >= 0.0, "tolerance must be non-negative");
        FitConfig {
            learning_rate,
            max_iterations,
            convergence_tolerance,
            gradient_mode: GradientMode::RevDense,
        }
    }

    pub fn with_mode(self, gradient_mode: GradientMode) -> Self {
        FitConfig { gradient_mode, ..self }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub parameters: Env,
    /// Updates applied.
    pub iterations_used: usize,
    /// Objective before each update, then after the last one.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

impl FitResult {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace is never empty")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("iteration {iteration}: {source}")]
    Evaluation {
        iteration: usize,
        #[source]
        source: AdError,
    },
    #[error("iteration {iteration}: gradient is not finite")]
    NonFiniteGradient { iteration: usize },
    #[error("iteration {iteration}: parameters left the finite range")]
    NonFiniteParameters { iteration: usize },
}

/// `Σ count · (-log density)` as a single expression, summed as a balanced
/// tree. Terms with count 1 omit the multiplier.
pub fn nll(terms: impl IntoIterator<Item = (Expr, u64)>) -> Expr {
    let terms = terms
        .into_iter()
        .map(|(density, count)| {
            let neg_log = Expr::neg(Expr::log(density));
            if count == 1 {
                neg_log
            } else {
                Expr::mul(Expr::Lit(count as f64), neg_log)
            }
        })
        .collect();
    Expr::balanced_sum(terms)
}

/// Minimizes `objective` from `initial`.
pub fn gradient_descent(
    objective: &Expr,
    initial: Env,
    config: &FitConfig,
) -> Result<FitResult, FitError> {
    let mut theta = initial.into_values();
    let mut trace = Vec::with_capacity(config.max_iterations.min(1 << 16) + 1);
    let mut iterations_used = 0;
    let mut converged = false;
    for iteration in 0..config.max_iterations {
        let env = Env::try_new(theta.clone())
            .map_err(|_| FitError::NonFiniteParameters { iteration })?;
        let (value, grad) = config
            .gradient_mode
            .gradient(objective, &env)
            .map_err(|source| FitError::Evaluation { iteration, source })?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(FitError::NonFiniteGradient { iteration });
        }
        trace.push(value);
        let mut step_norm = 0.0f64;
        for (t, g) in theta.iter_mut().zip(&grad) {
            let step = config.learning_rate * g;
            *t -= step;
            step_norm = step_norm.max(step.abs());
        }
        iterations_used = iteration + 1;
        if step_norm <= config.convergence_tolerance {
            converged = true;
            break;
        }
    }
    let parameters = Env::try_new(theta)
        .map_err(|_| FitError::NonFiniteParameters { iteration: iterations_used })?;
    let last = eval(objective, &parameters).map_err(|e| FitError::Evaluation {
        iteration: iterations_used,
        source: e.into(),
    })?;
    trace.push(last);
    Ok(FitResult { parameters, iterations_used, objective_trace: trace, converged })
}
