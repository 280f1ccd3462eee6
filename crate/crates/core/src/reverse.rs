//! Reverse-mode AD in a single traversal.
//!
//! Every node receives a multiplier `M`, the product of the local
//! derivatives on the path from the root (the root gets `1`). At a `Var`
//! leaf `M` is that leaf's contribution to the gradient. At `Mul(a, b)` the
//! left child needs `M * value(b)` before `b` has been visited, so child
//! multipliers are [deferred cells](crate::deferred) that resolve as soon as
//! the sibling's value is known. No second pass over the tree is made.
//!
//! The three variants differ only in how leaf contributions are collected:
//!
//! * [`rev_scalar`] builds a sparse map per subtree and merges siblings,
//! * [`rev_threaded`] threads one sparse accumulator through the traversal,
//! * [`rev_dense`] adds into a zero-initialized array in place.

use alloc::collections::btree_map::{self, BTreeMap};
use core::sync::atomic::{AtomicUsize, Ordering};

use crate::deferred::{CellArena, CellError, CellId, Sink};
use crate::error::AdError;
use crate::expr::{Env, Expr, VarId};
use crate::forward::{pow_partials, unary};
use crate::gradient::{union_with, DenseGradient, SparseGradient};
use crate::math;

static LEAKED_CELLS: AtomicUsize = AtomicUsize::new(0);

/// Total number of deferred cells found still pending at the end of a
/// completed reverse traversal, across the whole process. Always 0 unless
/// the traversal itself is broken.
pub fn leaked_cells() -> usize {
    LEAKED_CELLS.load(Ordering::Relaxed)
}

/// Bookkeeping from one reverse traversal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RevStats {
    /// Deferred cells created.
    pub cells: usize,
    /// Leaf contributions handed to the accumulator, one per `Var` leaf.
    pub inserts: usize,
    /// Dense gradient arrays allocated.
    pub gradient_allocations: usize,
}

/// How leaf contributions are gathered.
trait Accumulator: Sink {
    /// What a subtree hands back to its parent besides its value.
    type Partial;

    fn var(&mut self, cells: &mut CellArena, y: VarId, m: CellId) -> Self::Partial;
    fn lit(&mut self) -> Self::Partial;
    fn join(&mut self, cells: &mut CellArena, a: Self::Partial, b: Self::Partial)
        -> Self::Partial;
}

struct Traversal<'a, A> {
    env: &'a Env,
    cells: CellArena,
    acc: A,
    inserts: usize,
}

impl<'a, A: Accumulator> Traversal<'a, A> {
    fn new(env: &'a Env, acc: A) -> Self {
        Traversal { env, cells: CellArena::new(), acc, inserts: 0 }
    }

    /// Runs the traversal from a root multiplier of 1.
    fn run(mut self, e: &Expr) -> Result<(f64, A::Partial, Self), AdError> {
        let one = self.cells.resolved(1.0);
        let (f, partial, _) = self.walk(e, one)?;
        let pending = self.cells.pending_count();
        if pending != 0 {
            LEAKED_CELLS.fetch_add(pending, Ordering::Relaxed);
            return Err(CellError::Unresolved { pending }.into());
        }
        Ok((f, partial, self))
    }

    /// Completes the child multiplier `id` as `m * factor`.
    #[inline]
    fn scale(&mut self, id: CellId, m: CellId, factor: f64) -> Result<(), CellError> {
        self.cells.resolve_scaled_into(id, m, factor, &mut self.acc)
    }

    /// Returns the subtree's value, its partial result and whether it
    /// mentions any variable.
    fn walk(&mut self, e: &Expr, m: CellId) -> Result<(f64, A::Partial, bool), AdError> {
        Ok(match e {
            Expr::Lit(n) => (*n, self.acc.lit(), false),
            Expr::Var(y) => {
                let f = self.env.lookup(*y)?;
                self.inserts += 1;
                (f, self.acc.var(&mut self.cells, *y, m), true)
            }
            Expr::Add(a, b) => {
                let (f1, g1, v1) = self.walk(a, m)?;
                let (f2, g2, v2) = self.walk(b, m)?;
                (f1 + f2, self.acc.join(&mut self.cells, g1, g2), v1 || v2)
            }
            // A literal factor is known before either child is visited, so
            // the other child's multiplier resolves (or is scheduled) at once
            // and the literal, whose multiplier would be unused, needs none.
            Expr::Mul(a, b) if matches!(**b, Expr::Lit(_)) || matches!(**a, Expr::Lit(_)) => {
                let (c, other) = match (&**a, &**b) {
                    (_, Expr::Lit(c)) => (*c, a),
                    (Expr::Lit(c), _) => (*c, b),
                    _ => unreachable!(),
                };
                let m1 = self.cells.pending();
                self.scale(m1, m, c)?;
                let (f1, g1, v1) = self.walk(other, m1)?;
                (f1 * c, g1, v1)
            }
            Expr::Mul(a, b) => {
                // m1 = m * f2 and m2 = m * f1, each completed once the
                // sibling's value is known.
                let m1 = self.cells.pending();
                let m2 = self.cells.pending();
                let (f1, g1, v1) = self.walk(a, m1)?;
                self.scale(m2, m, f1)?;
                let (f2, g2, v2) = self.walk(b, m2)?;
                self.scale(m1, m, f2)?;
                (f1 * f2, self.acc.join(&mut self.cells, g1, g2), v1 || v2)
            }
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Log(a) => {
                let m1 = self.cells.pending();
                let (f1, g1, v1) = self.walk(a, m1)?;
                let (f, d) = unary(e, f1)?;
                self.scale(m1, m, d)?;
                (f, g1, v1)
            }
            Expr::Pow(a, b) => {
                let m1 = self.cells.pending();
                let (f1, g1, v1) = self.walk(a, m1)?;
                if let Expr::Lit(f2) = **b {
                    let f = math::pow(f1, f2)?;
                    let (p1, _) = pow_partials(f1, f2, false)?;
                    self.scale(m1, m, p1)?;
                    return Ok((f, g1, v1));
                }
                let m2 = self.cells.pending();
                let (f2, g2, v2) = self.walk(b, m2)?;
                let f = math::pow(f1, f2)?;
                let (p1, p2) = pow_partials(f1, f2, v2)?;
                self.scale(m1, m, p1)?;
                self.scale(m2, m, p2)?;
                (f, self.acc.join(&mut self.cells, g1, g2), v1 || v2)
            }
        })
    }

    fn stats(&self, gradient_allocations: usize) -> RevStats {
        RevStats { cells: self.cells.len(), inserts: self.inserts, gradient_allocations }
    }
}

fn to_sparse(
    cells: &CellArena,
    map: BTreeMap<VarId, CellId>,
) -> Result<SparseGradient, CellError> {
    map.into_iter()
        .map(|(y, c)| cells.value(c).map(|v| (y, v)).ok_or(CellError::Unresolved { pending: 1 }))
        .collect()
}

/// Per-subtree sparse maps of deferred values, merged at every binary node.
struct Merging;

impl Sink for Merging {
    fn accumulate(&mut self, _: VarId, _: f64) {
        unreachable!("merging accumulator registers no continuations")
    }
}

impl Accumulator for Merging {
    type Partial = BTreeMap<VarId, CellId>;

    fn var(&mut self, _: &mut CellArena, y: VarId, m: CellId) -> Self::Partial {
        let mut g = BTreeMap::new();
        g.insert(y, m);
        g
    }

    fn lit(&mut self) -> Self::Partial {
        BTreeMap::new()
    }

    fn join(&mut self, cells: &mut CellArena, a: Self::Partial, b: Self::Partial) -> Self::Partial {
        union_with(a, b, |x, y| cells.sum(x, y))
    }
}

/// Reverse mode with scalar multipliers and per-node gradient merges.
pub fn rev_scalar(e: &Expr, env: &Env) -> Result<(f64, SparseGradient), AdError> {
    let (f, map, t) = Traversal::new(env, Merging).run(e)?;
    Ok((f, to_sparse(&t.cells, map)?))
}

/// One sparse accumulator threaded through the whole traversal.
struct Threaded {
    acc: BTreeMap<VarId, CellId>,
}

impl Sink for Threaded {
    fn accumulate(&mut self, _: VarId, _: f64) {
        unreachable!("threaded accumulator registers no continuations")
    }
}

impl Accumulator for Threaded {
    type Partial = ();

    fn var(&mut self, cells: &mut CellArena, y: VarId, m: CellId) {
        match self.acc.entry(y) {
            btree_map::Entry::Vacant(slot) => {
                slot.insert(m);
            }
            btree_map::Entry::Occupied(mut slot) => {
                let s = cells.sum(*slot.get(), m);
                *slot.get_mut() = s;
            }
        }
    }

    fn lit(&mut self) {}

    fn join(&mut self, _: &mut CellArena, _: (), _: ()) {}
}

/// Reverse mode threading a single sparse accumulator, starting empty.
pub fn rev_threaded(e: &Expr, env: &Env) -> Result<(f64, SparseGradient), AdError> {
    rev_threaded_with_stats(e, env).map(|(f, g, _)| (f, g))
}

pub fn rev_threaded_with_stats(
    e: &Expr,
    env: &Env,
) -> Result<(f64, SparseGradient, RevStats), AdError> {
    let acc = Threaded { acc: BTreeMap::new() };
    let (f, (), mut t) = Traversal::new(env, acc).run(e)?;
    let map = core::mem::take(&mut t.acc.acc);
    Ok((f, to_sparse(&t.cells, map)?, t.stats(0)))
}

/// Dense gradient with in-place accumulation.
struct InPlace {
    grad: DenseGradient,
}

impl Sink for InPlace {
    #[inline]
    fn accumulate(&mut self, var: VarId, value: f64) {
        self.grad.add(var, value);
    }
}

impl Accumulator for InPlace {
    type Partial = ();

    #[inline]
    fn var(&mut self, cells: &mut CellArena, y: VarId, m: CellId) {
        cells.accumulate_when_resolved(m, y, &mut self.grad);
    }

    fn lit(&mut self) {}

    fn join(&mut self, _: &mut CellArena, _: (), _: ()) {}
}

/// Reverse mode over a dense gradient array sized from `env`.
pub fn rev_dense(e: &Expr, env: &Env) -> Result<(f64, DenseGradient), AdError> {
    rev_dense_with_stats(e, env).map(|(f, g, _)| (f, g))
}

pub fn rev_dense_with_stats(
    e: &Expr,
    env: &Env,
) -> Result<(f64, DenseGradient, RevStats), AdError> {
    let acc = InPlace { grad: DenseGradient::zeros(env.len()) };
    let (f, (), t) = Traversal::new(env, acc).run(e)?;
    let stats = t.stats(1);
    Ok((f, t.acc.grad, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::fwd_gradient;

    fn x(i: u32) -> VarId {
        VarId::new(i).unwrap()
    }

    fn env(v: &[f64]) -> Env {
        Env::new(v.to_vec())
    }

    fn sg(pairs: &[(u32, f64)]) -> SparseGradient {
        pairs.iter().map(|&(k, v)| (x(k), v)).collect()
    }

    #[test]
    fn scalar_examples() {
        let e = Expr::mul(Expr::var(1), Expr::var(2));
        assert_eq!(rev_scalar(&e, &env(&[3.0, 4.0])), Ok((12.0, sg(&[(1, 4.0), (2, 3.0)]))));
        assert_eq!(rev_scalar(&Expr::lit(2.0), &env(&[1.0])), Ok((2.0, SparseGradient::new())));
    }

    #[test]
    fn nested_products_agree_with_forward() {
        let e = Expr::mul(
            Expr::mul(Expr::var(1), Expr::var(2)),
            Expr::mul(Expr::var(3), Expr::var(4)),
        );
        let env = env(&[1.0, 2.0, 3.0, 4.0]);
        let (f, g) = fwd_gradient(&e, &env).unwrap();
        assert_eq!(rev_scalar(&e, &env), Ok((f, g.clone())));
        assert_eq!(g, sg(&[(1, 24.0), (2, 12.0), (3, 8.0), (4, 6.0)]));
    }

    #[test]
    fn threaded_examples() {
        let e = Expr::add(Expr::var(1), Expr::var(1));
        let (f, g, stats) = rev_threaded_with_stats(&e, &env(&[2.0])).unwrap();
        assert_eq!((f, g), (4.0, sg(&[(1, 2.0)])));
        assert_eq!(stats.inserts, 2);
        assert_eq!(rev_threaded(&Expr::lit(0.0), &env(&[1.0])), Ok((0.0, SparseGradient::new())));
    }

    #[test]
    fn dense_examples() {
        let e = Expr::mul(Expr::var(1), Expr::var(2));
        let (f, g) = rev_dense(&e, &env(&[3.0, 4.0])).unwrap();
        assert_eq!((f, g.values()), (12.0, &[4.0, 3.0][..]));
        let (f, g, stats) = rev_dense_with_stats(&Expr::lit(5.0), &env(&[0.0; 3])).unwrap();
        assert_eq!((f, g.values()), (5.0, &[0.0, 0.0, 0.0][..]));
        assert_eq!(stats.gradient_allocations, 1);
    }

    #[test]
    fn extended_multipliers() {
        let e = crate::parse("-sin(x1) * cos(x2) + exp(x1 * x2) + log(x2) + x1^x2").unwrap();
        let env = env(&[0.6, 1.7]);
        let (_, expected) = fwd_gradient(&e, &env).unwrap();
        let (_, g) = rev_dense(&e, &env).unwrap();
        for i in 1..=2 {
            assert!((g[i] - expected.get(x(i as u32))).abs() < 1e-12);
        }
    }

    #[test]
    fn pow_with_variable_exponent_needs_positive_base() {
        let e = Expr::pow(Expr::var(1), Expr::var(2));
        assert!(rev_dense(&e, &env(&[-1.0, 2.0])).is_err());
        assert!(rev_dense(&e, &env(&[0.0, 2.0])).is_err());
        // A constant exponent never takes the logarithm.
        let e = Expr::pow(Expr::var(1), Expr::lit(2.0));
        assert_eq!(rev_dense(&e, &env(&[-3.0])).unwrap().1.values(), &[-6.0]);
    }

    #[test]
    fn errors_propagate() {
        assert!(rev_scalar(&Expr::var(3), &env(&[1.0])).is_err());
        assert!(rev_threaded(&Expr::log(Expr::lit(-1.0)), &env(&[])).is_err());
    }

    #[test]
    fn no_cells_leak() {
        let e = crate::parse("x1 * (x2 * (x3 + x1 * x2)) * sin(x3 * x1)").unwrap();
        let env = env(&[0.3, -1.2, 2.0]);
        rev_scalar(&e, &env).unwrap();
        rev_threaded(&e, &env).unwrap();
        rev_dense(&e, &env).unwrap();
        assert_eq!(leaked_cells(), 0);
    }
}
