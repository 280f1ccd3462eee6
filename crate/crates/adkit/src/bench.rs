//! Wall-clock comparison of the gradient modes.
//!
//! Repetitions are interleaved round-robin across modes so slow drift of the
//! machine (frequency scaling, other load) affects every mode alike. Only
//! the timed call is inside the clock; generation, parsing and checksum
//! computation are not.

use std::fmt;
use std::hint::black_box;
use std::time::{Duration, Instant};

use adkit_core::forward::fwd_gradient;
use adkit_core::gen::{gen_expr, BenchSpec, GenError};
use adkit_core::optim::{FitConfig, FitError};
use adkit_core::reverse::{rev_dense, rev_scalar, rev_threaded};
use adkit_core::spll::{fit_spll, parse_spll, SampleSet, SpllError};
use adkit_core::{AdError, Env, Expr, GradientMode};

/// The six-parameter program used for the fitting benchmark.
pub const SIX_PARAMETER_PROGRAM: &str = "\
main = if Uniform >= Theta[1]
       then if Uniform >= Theta[2]
            then if Uniform >= Theta[3] then null    else [true]
            else if Uniform >= Theta[4] then [false] else [true,true]
       else if Uniform >= Theta[5]
            then if Uniform >= Theta[6] then [true,false] else [false,true]
            else [false,false]
";

/// Relative tolerance for cross-mode checksum agreement.
pub const CHECKSUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub mode: GradientMode,
    pub total: Duration,
    pub mean: Duration,
    pub median: Duration,
    /// `Σ |g_i|` of the gradient (or of the fitted parameters).
    pub checksum: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub title: String,
    pub repetitions: usize,
    pub rows: Vec<BenchRow>,
    /// Whether all checksums agree within [`CHECKSUM_TOLERANCE`].
    pub valid: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Ad(#[from] AdError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Spll(#[from] SpllError),
    #[error("no modes selected")]
    NoModes,
    #[error("repetitions must be at least 1")]
    NoRepetitions,
}

impl BenchReport {
    pub fn row(&self, mode: GradientMode) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.mode == mode)
    }

    /// `mode,mean_s,median_s,total_s,checksum` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode,mean_s,median_s,total_s,checksum\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.mode,
                r.mean.as_secs_f64(),
                r.median.as_secs_f64(),
                r.total.as_secs_f64(),
                r.checksum
            ));
        }
        out
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} ({} repetitions)", self.title, self.repetitions)?;
        writeln!(
            f,
            "{:<6} {:>12} {:>12} {:>12} {:>24}",
            "mode", "mean (s)", "median (s)", "total (s)", "checksum"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<6} {:>12.6} {:>12.6} {:>12.6} {:>24}",
                r.mode.name(),
                r.mean.as_secs_f64(),
                r.median.as_secs_f64(),
                r.total.as_secs_f64(),
                r.checksum
            )?;
        }
        write!(f, "checksums {}", if self.valid { "agree" } else { "DISAGREE" })
    }
}

fn median(mut times: Vec<Duration>) -> Duration {
    times.sort();
    let n = times.len();
    if n % 2 == 1 {
        times[n / 2]
    } else {
        (times[n / 2 - 1] + times[n / 2]) / 2
    }
}

/// Times `run` for each mode, `repetitions` times, round-robin. `run`
/// returns the elapsed time of its timed section and a checksum.
fn harness<F>(
    title: String,
    modes: &[GradientMode],
    repetitions: usize,
    mut run: F,
) -> Result<BenchReport, BenchError>
where
    F: FnMut(GradientMode) -> Result<(Duration, f64), BenchError>,
{
    if modes.is_empty() {
        return Err(BenchError::NoModes);
    }
    if repetitions == 0 {
        return Err(BenchError::NoRepetitions);
    }
    let mut times = vec![Vec::with_capacity(repetitions); modes.len()];
    let mut checksums = vec![0.0; modes.len()];
    for _ in 0..repetitions {
        for (i, &mode) in modes.iter().enumerate() {
            let (t, c) = run(mode)?;
            times[i].push(t);
            checksums[i] = c;
        }
    }
    let rows: Vec<BenchRow> = modes
        .iter()
        .zip(times)
        .zip(&checksums)
        .map(|((&mode, t), &checksum)| {
            let total: Duration = t.iter().sum();
            BenchRow { mode, total, mean: total / repetitions as u32, median: median(t), checksum }
        })
        .collect();
    let reference = checksums[0];
    let valid = checksums.iter().all(|&c| {
        c.is_finite()
            && (c - reference).abs() <= CHECKSUM_TOLERANCE * c.abs().max(reference.abs())
    });
    Ok(BenchReport { title, repetitions, rows, valid })
}

/// One timed gradient computation; returns the elapsed time and `Σ |g_i|`.
pub fn time_gradient(mode: GradientMode, e: &Expr, env: &Env) -> Result<(Duration, f64), AdError> {
    Ok(match mode {
        GradientMode::Forward => {
            let t = Instant::now();
            let (_, g) = black_box(fwd_gradient(black_box(e), env)?);
            (t.elapsed(), g.iter().map(|(_, v)| v.abs()).sum())
        }
        GradientMode::RevScalar => {
            let t = Instant::now();
            let (_, g) = black_box(rev_scalar(black_box(e), env)?);
            (t.elapsed(), g.iter().map(|(_, v)| v.abs()).sum())
        }
        GradientMode::RevThreaded => {
            let t = Instant::now();
            let (_, g) = black_box(rev_threaded(black_box(e), env)?);
            (t.elapsed(), g.iter().map(|(_, v)| v.abs()).sum())
        }
        GradientMode::RevDense => {
            let t = Instant::now();
            let (_, g) = black_box(rev_dense(black_box(e), env)?);
            (t.elapsed(), g.values().iter().map(|v| v.abs()).sum())
        }
    })
}

/// Benchmarks the gradient of a fixed expression.
pub fn bench_expr(
    title: String,
    e: &Expr,
    env: &Env,
    modes: &[GradientMode],
    repetitions: usize,
) -> Result<BenchReport, BenchError> {
    harness(title, modes, repetitions, |mode| Ok(time_gradient(mode, e, env)?))
}

/// Benchmarks the gradient of a generated random tree.
pub fn run_bench(spec: &BenchSpec) -> Result<BenchReport, BenchError> {
    let (e, env) = gen_expr(spec)?;
    let title = format!(
        "random tree: N={} V={} seed={}",
        spec.node_count, spec.variable_count, spec.rng_seed
    );
    bench_expr(title, &e, &env, &spec.modes, spec.repetitions)
}

/// Benchmarks the complete six-parameter fit: three samples per outcome,
/// θ⁰ = (0.5, 0.25, …), λ = 0.02 and exactly 100 iterations, run once per
/// repetition per mode. Checksums are `Σ |θ_k|` of the fitted parameters.
pub fn spll_fit_bench(
    modes: &[GradientMode],
    repetitions: usize,
) -> Result<BenchReport, BenchError> {
    let program = parse_spll(SIX_PARAMETER_PROGRAM)?;
    let samples: SampleSet = program.leaves().into_iter().map(|o| (o.clone(), 3)).collect();
    let initial = Env::new(vec![0.5, 0.25, 0.25, 0.25, 0.25, 0.25]);
    let base = FitConfig::new(0.02, 100, 0.0);
    harness("six-parameter SPLL fit".into(), modes, repetitions, |mode| {
        let config = base.with_mode(mode);
        let t = Instant::now();
        let r = black_box(fit_spll(&program, &samples, initial.clone(), &config)?);
        let elapsed = t.elapsed();
        Ok((elapsed, r.parameters.values().iter().map(|v| v.abs()).sum()))
    })
}
