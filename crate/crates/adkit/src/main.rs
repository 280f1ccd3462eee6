use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adkit::bench::{run_bench, spll_fit_bench, BenchError};
use adkit::formats::{self, FormatError};
use adkit_core::gen::BenchSpec;
use adkit_core::optim::{FitConfig, FitError};
use adkit_core::plp::{self, GaussianVi, PlpError, VIConfig};
use adkit_core::spll::{self, SpllError};
use adkit_core::symbolic::symb_derive;
use adkit_core::{eval, format, parse, AdError, Env, EvalError, GradientMode, ParseError, VarId};
use clap::{Parser, Subcommand, ValueEnum};

/// Differentiate, fit and benchmark small arithmetic expressions.
#[derive(Parser)]
#[command(name = "adkit", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an expression.
    Eval {
        #[arg(short = 'e', allow_hyphen_values = true)]
        expr: String,
        /// Comma-separated values of x1, x2, ...
        #[arg(short = 'x', allow_hyphen_values = true)]
        env: String,
    },
    /// Print the symbolic derivative with respect to one variable.
    Deriv {
        #[arg(short = 'e', allow_hyphen_values = true)]
        expr: String,
        /// Variable index (1-based).
        #[arg(short = 'v')]
        var: u32,
    },
    /// Print the value and gradient.
    Grad {
        #[arg(short = 'e', allow_hyphen_values = true)]
        expr: String,
        #[arg(short = 'x', allow_hyphen_values = true)]
        env: String,
        #[arg(long, default_value = "rev")]
        mode: GradientMode,
    },
    /// Fit the parameters of an SPLL program to a sample file.
    FitSpll {
        #[arg(short = 'p')]
        program: PathBuf,
        #[arg(short = 'd')]
        data: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        init: String,
        #[arg(long)]
        lr: f64,
        /// Run exactly this many iterations (no convergence test).
        #[arg(long, conflicts_with = "tol")]
        iters: Option<usize>,
        /// Stop once the update's max-norm is at most this [default: 1e-14].
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value = "rev")]
        mode: GradientMode,
    },
    /// Draw outcomes from an SPLL program.
    SampleSpll {
        #[arg(short = 'p')]
        program: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        #[arg(short = 'n')]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit μ and σ² = e^W of the widget model to a sample file.
    FitWidget {
        #[arg(short = 'd')]
        data: PathBuf,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        init_mu: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        init_w: f64,
        #[arg(long, default_value_t = 5e-5)]
        lr: f64,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 2.5e-4)]
        tol: f64,
    },
    /// Generate widget measurements.
    SampleWidget {
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.5)]
        mu: f64,
        #[arg(long, default_value_t = 0.1)]
        sigma2: f64,
        #[arg(short = 'n')]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Score-function gradient estimate for N(θ, 1) against N(target, 1).
    ViDemo {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'n', default_value_t = 10_000)]
        count: usize,
        #[arg(short = 'K', allow_hyphen_values = true, default_value_t = 0.0)]
        baseline: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.7)]
        theta: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        target: f64,
    },
    /// Time the gradient modes.
    Bench {
        #[arg(short = 'N', default_value_t = 100_000)]
        nodes: usize,
        #[arg(short = 'V', default_value_t = 1_000)]
        vars: usize,
        #[arg(short = 'r', default_value_t = 5)]
        reps: usize,
        /// Comma-separated subset of fwd, rev1, rev2, rev.
        #[arg(long, default_value = "fwd,rev1,rev2,rev")]
        modes: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use extended constructors in the generated tree.
        #[arg(long)]
        extended: bool,
        /// Run the six-parameter SPLL fit instead of a random tree.
        #[arg(long, value_enum, default_value_t = Workload::Tree)]
        workload: Workload,
        /// Print CSV instead of a table.
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Workload {
    Tree,
    Spll,
}

#[derive(Debug, thiserror::Error)]
enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    File { path: PathBuf, source: FormatError },
    #[error("{path}: {source}")]
    Program { path: PathBuf, source: SpllError },
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Ad(#[from] AdError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Spll(#[from] SpllError),
    #[error(transparent)]
    Plp(#[from] PlpError),
    #[error(transparent)]
    Bench(#[from] BenchError),
}

impl Error {
    fn exit_code(&self) -> u8 {
        match self {
            Error::Usage(_) => 1,
            _ => 2,
        }
    }
}

fn parse_list(flag: &str, text: &str) -> Result<Vec<f64>, Error> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Usage(format!("{flag}: `{}` is not a finite number", s.trim())))
        })
        .collect()
}

fn parse_env(flag: &str, text: &str) -> Result<Env, Error> {
    Ok(Env::new(parse_list(flag, text)?))
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })
}

fn read_program(path: &Path) -> Result<spll::SpllProgram, Error> {
    spll::parse_spll(&read(path)?).map_err(|source| Error::Program { path: path.into(), source })
}

fn run(command: Command) -> Result<String, Error> {
    let mut out = String::new();
    match command {
        Command::Eval { expr, env } => {
            let e = parse(&expr)?;
            let env = parse_env("-x", &env)?;
            out += &format!("{}\n", eval(&e, &env)?);
        }
        Command::Deriv { expr, var } => {
            let e = parse(&expr)?;
            let x = VarId::new(var).ok_or_else(|| Error::Usage("-v: indices start at 1".into()))?;
            out += &format!("{}\n", format(&symb_derive(&e, x)));
        }
        Command::Grad { expr, env, mode } => {
            let e = parse(&expr)?;
            let env = parse_env("-x", &env)?;
            let (f, g) = mode.gradient(&e, &env)?;
            out += &format!("primal={f}\n");
            for (i, v) in g.iter().enumerate() {
                if mode == GradientMode::RevDense || *v != 0.0 {
                    out += &format!("x{}={v}\n", i + 1);
                }
            }
        }
        Command::FitSpll { program, data, init, lr, iters, tol, mode } => {
            let p = read_program(&program)?;
            let samples = formats::parse_spll_samples(&read(&data)?)
                .map_err(|source| Error::File { path: data.clone(), source })?;
            let initial = parse_env("--init", &init)?;
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::Usage("--lr must be positive".into()));
            }
            let config = match (iters, tol) {
                (Some(0), _) => return Err(Error::Usage("--iters must be at least 1".into())),
                (Some(n), _) => FitConfig::new(lr, n, 0.0),
                (None, Some(t)) if !(t >= 0.0) => {
                    return Err(Error::Usage("--tol must be non-negative".into()))
                }
                (None, t) => FitConfig::new(lr, 100_000, t.unwrap_or(1e-14)),
            }
            .with_mode(mode);
            let r = spll::fit_spll(&p, &samples, initial, &config)?;
            for (k, v) in r.parameters.values().iter().enumerate() {
                out += &format!("theta{}={v}\n", k + 1);
            }
            out += &format!(
                "steps={}\nconverged={}\nnll={}\n",
                r.iterations_used,
                r.converged,
                r.final_objective()
            );
        }
        Command::SampleSpll { program, theta, count, seed } => {
            let p = read_program(&program)?;
            let theta = parse_env("--theta", &theta)?;
            let outcomes = spll::sample_many(&p, &theta, seed, count)?;
            out += &formats::write_outcomes(&outcomes);
        }
        Command::FitWidget { data, init_mu, init_w, lr, iters, tol } => {
            let samples = formats::parse_widget_samples(&read(&data)?)
                .map_err(|source| Error::File { path: data.clone(), source })?;
            if !(lr > 0.0 && lr.is_finite()) || iters == 0 || !(tol >= 0.0) {
                return Err(Error::Usage("--lr, --iters and --tol must be positive".into()));
            }
            let fit = plp::fit_widget(&samples, (init_mu, init_w), &FitConfig::new(lr, iters, tol))?;
            out += &format!(
                "mu={}\nsigma2={}\niterations={}\nconverged={}\nnll_initial={}\nnll={}\n",
                fit.mu,
                fit.sigma2,
                fit.result.iterations_used,
                fit.result.converged,
                fit.result.objective_trace[0],
                fit.result.final_objective()
            );
        }
        Command::SampleWidget { mu, sigma2, count, seed } => {
            out += &formats::write_reals(&plp::widget_sample(mu, sigma2, seed, count)?);
        }
        Command::ViDemo { seed, count, baseline, theta, target } => {
            if count == 0 {
                return Err(Error::Usage("-n must be at least 1".into()));
            }
            let config = VIConfig { sample_count: count, baseline_constant: baseline, rng_seed: seed };
            let r = GaussianVi { theta, target_mean: target }.run(&config)?;
            out += &format!(
                "gradient={}\ngradient_se={}\nobjective={}\nobjective_se={}\nexact_gradient={}\nexact_objective={}\n",
                r.gradient.mean[0],
                r.gradient.std_error[0],
                r.objective.mean,
                r.objective.std_error,
                r.exact_gradient,
                r.exact_objective
            );
        }
        Command::Bench { nodes, vars, reps, modes, seed, extended, workload, csv } => {
            let modes = modes
                .split(',')
                .map(|m| m.trim().parse::<GradientMode>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Error::Usage(e.to_string()))?;
            let report = match workload {
                Workload::Tree => {
                    let spec = BenchSpec {
                        node_count: nodes,
                        variable_count: vars,
                        repetitions: reps,
                        modes,
                        rng_seed: seed,
                        extended,
                    };
                    run_bench(&spec)?
                }
                Workload::Spll => spll_fit_bench(&modes, reps)?,
            };
            if csv {
                out += &report.to_csv();
            } else {
                out += &format!("{report}\n");
            }
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
