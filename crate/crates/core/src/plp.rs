//! Gaussian-mixture likelihoods and score-function variational inference.
//!
//! The running example is the "widget" program: a widget is produced by
//! machine `a` (probability 0.3) or `b` (0.7), which adds `N(2, 1)` or
//! `N(3, 1)` noise to a shared quantity `Y ~ N(μ, σ²)`. The observed value
//! `Y + Z` therefore has density
//!
//! ```text
//! p(x) = 0.3 φ(x; 2 + μ, 1 + σ²) + 0.7 φ(x; 3 + μ, 1 + σ²)
//! ```
//!
//! Fitting uses parameters `x1 = μ` and `x2 = W` with `σ² = e^W`, which keeps
//! the variance positive for every real `W`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::expr::{eval, Env, EvalError, Expr};
use crate::math;
use crate::mode::GradientMode;
use crate::optim::{self, FitConfig, FitError, FitResult};
use crate::reverse::rev_dense;
use crate::{seeded_rng, AdError, SeededRng};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PlpError {
    #[error("no samples")]
    NoSamples,
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("mixture weights must lie in (0, 1] and sum to 1")]
    InvalidWeights,
    #[error("sample count must be at least 1")]
    NoDraws,
    #[error("draw {sample}: non-finite intermediate value")]
    NonFinite { sample: usize },
    #[error(transparent)]
    Ad(#[from] AdError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// `φ(x; mean, variance)` with `x` folded in as a literal.
pub fn gaussian_pdf_expr(x: f64, mean: Expr, variance: Expr) -> Expr {
    let sigma = Expr::pow(variance, Expr::Lit(0.5));
    let norm = Expr::pow(Expr::mul(sigma.clone(), Expr::Lit(math::sqrt(2.0 * PI))), Expr::Lit(-1.0));
    let z = Expr::mul(Expr::add(Expr::Lit(x), Expr::neg(mean)), Expr::pow(sigma, Expr::Lit(-1.0)));
    let exponent = Expr::mul(Expr::Lit(-0.5), Expr::pow(z, Expr::Lit(2.0)));
    Expr::mul(norm, Expr::exp(exponent))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussComponent {
    pub weight: f64,
    pub mean: Expr,
    pub variance: Expr,
}

/// A finite Gaussian mixture whose component means and variances are
/// expressions over the model parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureModel {
    components: Vec<GaussComponent>,
}

impl MixtureModel {
    pub fn new(components: Vec<GaussComponent>) -> Result<Self, PlpError> {
        let total: f64 = components.iter().map(|c| c.weight).sum();
        let weights_ok = components.iter().all(|c| c.weight > 0.0 && c.weight <= 1.0);
        if components.is_empty() || !weights_ok || (total - 1.0).abs() > 1e-12 {
            return Err(PlpError::InvalidWeights);
        }
        Ok(MixtureModel { components })
    }

    /// The widget model over `x1 = μ`, `x2 = W`.
    pub fn widget() -> Self {
        let variance = || Expr::add(Expr::lit(1.0), Expr::exp(Expr::var(2)));
        MixtureModel {
            components: alloc::vec![
                GaussComponent {
                    weight: 0.3,
                    mean: Expr::add(Expr::lit(2.0), Expr::var(1)),
                    variance: variance(),
                },
                GaussComponent {
                    weight: 0.7,
                    mean: Expr::add(Expr::lit(3.0), Expr::var(1)),
                    variance: variance(),
                },
            ],
        }
    }

    pub fn components(&self) -> &[GaussComponent] {
        &self.components
    }

    /// `p(x)` as an expression over the parameters.
    pub fn density_expr(&self, x: f64) -> Expr {
        self.components
            .iter()
            .map(|c| {
                let pdf = gaussian_pdf_expr(x, c.mean.clone(), c.variance.clone());
                if c.weight == 1.0 {
                    pdf
                } else {
                    Expr::mul(Expr::Lit(c.weight), pdf)
                }
            })
            .reduce(Expr::add)
            .expect("mixtures are non-empty")
    }

    pub fn density(&self, x: f64, params: &Env) -> Result<f64, EvalError> {
        eval(&self.density_expr(x), params)
    }
}

/// `Σ_x -log p(x)` over the samples, as one expression.
pub fn widget_nll(samples: &[f64], model: &MixtureModel) -> Result<Expr, PlpError> {
    if samples.is_empty() {
        return Err(PlpError::NoSamples);
    }
    Ok(optim::nll(samples.iter().map(|&x| (model.density_expr(x), 1))))
}

/// Outcome of a widget fit in the natural parametrization.
#[derive(Clone, Debug, PartialEq)]
pub struct WidgetFit {
    pub mu: f64,
    pub sigma2: f64,
    pub result: FitResult,
}

/// Gradient descent on [`widget_nll`] for an arbitrary mixture whose
/// parameters are `x1 = μ`, `x2 = W`. Always uses dense reverse mode.
pub fn fit_mixture(
    samples: &[f64],
    model: &MixtureModel,
    initial: (f64, f64),
    config: &FitConfig,
) -> Result<WidgetFit, PlpError> {
    let objective = widget_nll(samples, model)?;
    let config = config.with_mode(GradientMode::RevDense);
    let result = optim::gradient_descent(&objective, Env::new(alloc::vec![initial.0, initial.1]), &config)?;
    let (mu, w) = (result.parameters.values()[0], result.parameters.values()[1]);
    Ok(WidgetFit { mu, sigma2: math::exp(w), result })
}

/// Fits the widget model; `initial` is `(μ0, W0)`.
pub fn fit_widget(
    samples: &[f64],
    initial: (f64, f64),
    config: &FitConfig,
) -> Result<WidgetFit, PlpError> {
    fit_mixture(samples, &MixtureModel::widget(), initial, config)
}

/// One generated widget: its measured value and whether machine `a` made it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Widget {
    pub value: f64,
    pub machine_a: bool,
}

/// Runs the generative widget program `count` times.
pub fn widget_sample_detailed(
    mu: f64,
    sigma2: f64,
    rng_seed: u64,
    count: usize,
) -> Result<Vec<Widget>, PlpError> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(PlpError::NonPositiveVariance(sigma2));
    }
    let y = Normal::new(mu, math::sqrt(sigma2)).map_err(|_| PlpError::NonPositiveVariance(sigma2))?;
    let za = Normal::new(2.0, 1.0).expect("valid");
    let zb = Normal::new(3.0, 1.0).expect("valid");
    let mut rng: SeededRng = seeded_rng(rng_seed);
    Ok((0..count)
        .map(|_| {
            let machine_a = rng.random::<f64>() < 0.3;
            let z = if machine_a { za.sample(&mut rng) } else { zb.sample(&mut rng) };
            Widget { value: y.sample(&mut rng) + z, machine_a }
        })
        .collect())
}

/// Measured values of `count` generated widgets.
pub fn widget_sample(mu: f64, sigma2: f64, rng_seed: u64, count: usize) -> Result<Vec<f64>, PlpError> {
    Ok(widget_sample_detailed(mu, sigma2, rng_seed, count)?.into_iter().map(|w| w.value).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VIConfig {
    /// Number of Monte Carlo draws, at least 1.
    pub sample_count: usize,
    /// The baseline `K` added inside the score-function bracket.
    pub baseline_constant: f64,
    pub rng_seed: u64,
}

/// A Monte Carlo mean with its standard error. The standard error is NaN
/// when only one draw was made.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate<T> {
    pub mean: T,
    pub std_error: T,
}

/// Running mean and variance (Welford).
#[derive(Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn finish(self) -> (f64, f64) {
        if self.n < 2 {
            return (self.mean, f64::NAN);
        }
        let var = self.m2 / (self.n - 1) as f64;
        (self.mean, math::sqrt(var / self.n as f64))
    }
}

/// Score-function estimate of `-∇θ L(θ)`:
/// `(1/N) Σ_j ∇θ log pθ(x_j) · (log pθ(x_j) - log_joint(x_j) + K)` with
/// `x_j` drawn by `sampler`.
pub fn vi_gradient_estimate(
    log_p_theta: impl Fn(f64) -> f64,
    grad_log_p_theta: impl Fn(f64) -> Vec<f64>,
    log_joint: impl Fn(f64) -> f64,
    mut sampler: impl FnMut(&mut SeededRng) -> f64,
    config: &VIConfig,
) -> Result<Estimate<Vec<f64>>, PlpError> {
    if config.sample_count == 0 {
        return Err(PlpError::NoDraws);
    }
    let mut rng = seeded_rng(config.rng_seed);
    let mut moments: Vec<Moments> = Vec::new();
    for j in 0..config.sample_count {
        let x = sampler(&mut rng);
        let bracket = log_p_theta(x) - log_joint(x) + config.baseline_constant;
        let score = grad_log_p_theta(x);
        if !x.is_finite() || !bracket.is_finite() || score.iter().any(|g| !g.is_finite()) {
            return Err(PlpError::NonFinite { sample: j });
        }
        if moments.is_empty() {
            moments.resize(score.len(), Moments::default());
        }
        for (m, g) in moments.iter_mut().zip(score) {
            m.push(g * bracket);
        }
    }
    let (mean, std_error) = moments.into_iter().map(Moments::finish).unzip();
    Ok(Estimate { mean, std_error })
}

/// Monte Carlo estimate of `L(θ) = E_pθ[log_joint(x) - log pθ(x)]`.
pub fn kl_objective_value(
    log_p_theta: impl Fn(f64) -> f64,
    log_joint: impl Fn(f64) -> f64,
    mut sampler: impl FnMut(&mut SeededRng) -> f64,
    config: &VIConfig,
) -> Result<Estimate<f64>, PlpError> {
    if config.sample_count == 0 {
        return Err(PlpError::NoDraws);
    }
    let mut rng = seeded_rng(config.rng_seed);
    let mut moments = Moments::default();
    for j in 0..config.sample_count {
        let x = sampler(&mut rng);
        let r = log_joint(x) - log_p_theta(x);
        if !r.is_finite() {
            return Err(PlpError::NonFinite { sample: j });
        }
        moments.push(r);
    }
    let (mean, std_error) = moments.finish();
    Ok(Estimate { mean, std_error })
}

/// The built-in conjugate example: variational family `N(θ, 1)` against the
/// target `N(target_mean, 1)`. The exact objective is
/// `L(θ) = -(θ - target_mean)² / 2`, so the estimator targets
/// `-∇L = θ - target_mean`. The score `∇θ log pθ(x)` is computed by reverse
/// mode on the log-density expression.
/// `ln(2π) / 2`.
const HALF_LN_TAU: f64 = 0.918_938_533_204_672_8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianVi {
    pub theta: f64,
    pub target_mean: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViReport {
    pub gradient: Estimate<Vec<f64>>,
    pub objective: Estimate<f64>,
    pub exact_gradient: f64,
    pub exact_objective: f64,
}

impl GaussianVi {
    fn log_normal(x: f64, mean: f64) -> f64 {
        -0.5 * (x - mean) * (x - mean) - HALF_LN_TAU
    }

    pub fn run(&self, config: &VIConfig) -> Result<ViReport, PlpError> {
        let theta = self.theta;
        let target = self.target_mean;
        let family = Normal::new(theta, 1.0).map_err(|_| PlpError::NonFinite { sample: 0 })?;
        let env = Env::try_new(alloc::vec![theta]).map_err(|_| PlpError::NonFinite { sample: 0 })?;
        let score = |x: f64| {
            let log_density = Expr::log(gaussian_pdf_expr(x, Expr::var(1), Expr::lit(1.0)));
            match rev_dense(&log_density, &env) {
                Ok((_, g)) => g.into_values(),
                Err(_) => alloc::vec![f64::NAN],
            }
        };
        let log_p = |x: f64| Self::log_normal(x, theta);
        let log_joint = |x: f64| Self::log_normal(x, target);
        let gradient =
            vi_gradient_estimate(log_p, score, log_joint, |rng| family.sample(rng), config)?;
        let objective = kl_objective_value(log_p, log_joint, |rng| family.sample(rng), config)?;
        Ok(ViReport {
            gradient,
            objective,
            exact_gradient: theta - target,
            exact_objective: -0.5 * (theta - target) * (theta - target),
        })
    }
}
