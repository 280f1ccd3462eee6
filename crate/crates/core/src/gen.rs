//! Seeded random expressions for benchmarks and property tests.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::expr::{Env, Expr};
use crate::math;
use crate::mode::GradientMode;
use crate::{seeded_rng, SeededRng};

/// Parameters of a benchmark instance.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchSpec {
    /// Exact number of nodes in the generated tree.
    pub node_count: usize,
    pub variable_count: usize,
    pub repetitions: usize,
    pub modes: Vec<GradientMode>,
    pub rng_seed: u64,
    /// Also use `Neg`, `Sin`, `Cos`, `Exp`, `Log` and `Pow`.
    pub extended: bool,
}

impl BenchSpec {
    pub fn new(node_count: usize, variable_count: usize, rng_seed: u64) -> Self {
        BenchSpec {
            node_count,
            variable_count,
            repetitions: 1,
            modes: GradientMode::ALL.to_vec(),
            rng_seed,
            extended: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("node and variable counts must be at least 1")]
    Empty,
    #[error("cannot place {vars} variables in {nodes} nodes")]
    Infeasible { nodes: usize, vars: usize },
    #[error("repetitions must be at least 1")]
    NoRepetitions,
}

/// A random tree with exactly `spec.node_count` nodes over variables
/// `1..=spec.variable_count`, and an environment with values in
/// `[0.5, 1.5]`.
///
/// Leaves are split at random positions; at each internal node the operator
/// is usually the one keeping the value closest to 1, so deep trees neither
/// overflow nor underflow. Every variable occurs at least once whenever the
/// tree has that many leaves (always the case for `N >= 2V`). Without
/// `extended` the only non-binary node is a single `Neg`, needed when `N` is
/// even.
pub fn gen_expr(spec: &BenchSpec) -> Result<(Expr, Env), GenError> {
    let (n, v) = (spec.node_count, spec.variable_count);
    if n == 0 || v == 0 {
        return Err(GenError::Empty);
    }
    if spec.repetitions == 0 {
        return Err(GenError::NoRepetitions);
    }
    if v > n {
        return Err(GenError::Infeasible { nodes: n, vars: v });
    }
    let mut rng = seeded_rng(spec.rng_seed);
    let max_leaves = n.div_ceil(2);
    let leaves = if spec.extended {
        rng.random_range(v.min(max_leaves)..=max_leaves)
    } else {
        max_leaves
    };
    let unaries = n - (2 * leaves - 1);

    let env: Vec<f64> = (0..v).map(|_| rng.random_range(0.5..=1.5)).collect();
    let mut vars: Vec<u32> = (1..=v as u32).collect();
    vars.shuffle(&mut rng);
    vars.truncate(leaves);
    let mut leaf_list: Vec<Leaf> = vars.into_iter().map(Leaf::Var).collect();
    while leaf_list.len() < leaves {
        leaf_list.push(if rng.random_bool(0.75) {
            Leaf::Var(rng.random_range(1..=v as u32))
        } else {
            Leaf::Lit(rng.random_range(0.5..=1.5))
        });
    }
    leaf_list.shuffle(&mut rng);

    let mut g = Builder { rng, env: &env, extended: spec.extended, leaves: leaf_list.into_iter() };
    let (e, _) = g.build(leaves, unaries);
    debug_assert_eq!(e.node_count(), n);
    Ok((e, Env::new(env)))
}

#[derive(Clone, Copy)]
enum Leaf {
    Var(u32),
    Lit(f64),
}

struct Builder<'a, I> {
    rng: SeededRng,
    env: &'a [f64],
    extended: bool,
    leaves: I,
}

/// Distance from 1 on a log scale; infinite for 0 and non-finite values.
fn badness(x: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() {
        f64::INFINITY
    } else if a >= 1.0 {
        a
    } else {
        1.0 / a
    }
}

impl<I: Iterator<Item = Leaf>> Builder<'_, I> {
    /// A subtree with `leaves` leaves and `unaries` one-argument nodes,
    /// with its value.
    fn build(&mut self, leaves: usize, unaries: usize) -> (Expr, f64) {
        let binaries = leaves - 1;
        let wrap_here =
            unaries > 0 && (leaves == 1 || self.rng.random_range(0..unaries + binaries) < unaries);
        if wrap_here {
            let (e, v) = self.build(leaves, unaries - 1);
            return self.unary(e, v);
        }
        if leaves == 1 {
            return match self.leaves.next().expect("leaf count matches") {
                Leaf::Var(k) => (Expr::var(k), self.env[k as usize - 1]),
                Leaf::Lit(x) => (Expr::Lit(x), x),
            };
        }
        let left_leaves = self.rng.random_range(1..leaves);
        let left_unaries =
            (0..unaries).filter(|_| self.rng.random_range(0..leaves) < left_leaves).count();
        let (a, x) = self.build(left_leaves, left_unaries);
        let (b, y) = self.build(leaves - left_leaves, unaries - left_unaries);
        self.binary(a, x, b, y)
    }

    fn binary(&mut self, a: Expr, x: f64, b: Expr, y: f64) -> (Expr, f64) {
        #[derive(Clone, Copy)]
        enum Op {
            Add,
            Mul,
            Pow,
        }
        let mut candidates = [(Op::Add, x + y), (Op::Mul, x * y), (Op::Pow, f64::INFINITY)];
        let mut count = 2;
        if self.extended && x > 0.0 && (y * math::ln(x).unwrap_or(0.0)).abs() < 3.0 {
            if let Ok(p) = math::pow(x, y) {
                candidates[2].1 = p;
                count = 3;
            }
        }
        let candidates = &candidates[..count];
        let (op, value) = if self.rng.random_bool(0.9) {
            *candidates
                .iter()
                .min_by(|p, q| badness(p.1).total_cmp(&badness(q.1)))
                .expect("non-empty")
        } else {
            candidates[self.rng.random_range(0..count)]
        };
        let e = match op {
            Op::Add => Expr::Add(Box::new(a), Box::new(b)),
            Op::Mul => Expr::Mul(Box::new(a), Box::new(b)),
            Op::Pow => Expr::Pow(Box::new(a), Box::new(b)),
        };
        (e, value)
    }

    fn unary(&mut self, e: Expr, v: f64) -> (Expr, f64) {
        if !self.extended {
            return (Expr::neg(e), -v);
        }
        let mut options: Vec<(fn(Expr) -> Expr, f64)> = alloc::vec![
            (Expr::neg, -v),
            (Expr::sin, math::sin(v)),
            (Expr::cos, math::cos(v)),
        ];
        if v < 3.0 {
            options.push((Expr::exp, math::exp(v)));
        }
        if v > 0.05 {
            options.push((Expr::log, math::ln(v).expect("positive")));
        }
        let (f, value) = options[self.rng.random_range(0..options.len())];
        (f(e), value)
    }
}

/// A random tree over all constructors with depth at most `max_depth` and
/// variables drawn from `1..=var_count`. Domain errors are possible at
/// evaluation time; callers reject and redraw.
pub fn random_expr(rng: &mut impl Rng, max_depth: usize, var_count: u32) -> Expr {
    if max_depth <= 1 || rng.random_bool(0.25) {
        return if rng.random_bool(0.7) {
            Expr::var(rng.random_range(1..=var_count))
        } else {
            Expr::Lit(rng.random_range(-2.0..=2.0))
        };
    }
    let d = max_depth - 1;
    match rng.random_range(0..10) {
        0 | 1 => Expr::add(random_expr(rng, d, var_count), random_expr(rng, d, var_count)),
        2 | 3 => Expr::mul(random_expr(rng, d, var_count), random_expr(rng, d, var_count)),
        4 => Expr::neg(random_expr(rng, d, var_count)),
        5 => Expr::sin(random_expr(rng, d, var_count)),
        6 => Expr::cos(random_expr(rng, d, var_count)),
        7 => Expr::exp(random_expr(rng, d.min(3), var_count)),
        8 => Expr::log(random_expr(rng, d, var_count)),
        _ => {
            let exponent = if rng.random_bool(0.5) {
                Expr::Lit([2.0, 3.0, -1.0, 0.5, 1.5][rng.random_range(0..5)])
            } else {
                random_expr(rng, d.min(3), var_count)
            };
            Expr::pow(random_expr(rng, d, var_count), exponent)
        }
    }
}

/// `count` values uniform in `[lo, hi]`, as an environment.
pub fn random_env(rng: &mut impl Rng, count: usize, lo: f64, hi: f64) -> Env {
    Env::new((0..count).map(|_| rng.random_range(lo..=hi)).collect())
}
