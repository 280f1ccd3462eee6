//! One-shot deferred cells.
//!
//! A cell is either pending or resolved. Arithmetic on cells whose inputs are
//! not yet known is registered as a continuation and runs as soon as the
//! last input resolves, so a traversal can hand a multiplier down to a
//! subtree before the multiplier's value exists.
//!
//! ```
//! use adkit_core::deferred::CellArena;
//!
//! let mut cells = CellArena::new();
//! let m = cells.pending();
//! let f = cells.pending();
//! let p = cells.product(m, f);
//! cells.resolve(f, 3.0).unwrap();
//! assert_eq!(cells.value(p), None);
//! cells.resolve(m, 2.0).unwrap();
//! assert_eq!(cells.value(p), Some(6.0));
//! ```

use alloc::vec::Vec;
use core::fmt;

use crate::expr::VarId;
use crate::gradient::DenseGradient;

/// Handle to a cell in a [`CellArena`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CellId(u32);

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cell #{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CellError {
    #[error("{0} resolved twice")]
    DoubleResolution(CellId),
    #[error("{pending} cells still pending after the traversal")]
    Unresolved { pending: usize },
}

const NIL: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Cell {
    value: f64,
    resolved: bool,
    /// Head of the intrusive list of continuations waiting on this cell.
    waiters: u32,
}

#[derive(Clone, Copy)]
enum Action {
    Product { a: CellId, b: CellId, out: CellId },
    Sum { a: CellId, b: CellId, out: CellId },
    /// `out = base * factor`, the factor parked in `out`'s value slot.
    Scale { base: CellId, out: CellId },
    Accumulate { src: CellId, var: VarId },
}

#[derive(Clone, Copy)]
struct Continuation {
    action: Action,
    next: u32,
}

/// Destination of [`Action::Accumulate`] continuations.
pub(crate) trait Sink {
    fn accumulate(&mut self, var: VarId, value: f64);
}

impl Sink for DenseGradient {
    #[inline]
    fn accumulate(&mut self, var: VarId, value: f64) {
        self.add(var, value);
    }
}

pub(crate) struct NoSink;

impl Sink for NoSink {
    fn accumulate(&mut self, _: VarId, _: f64) {
        unreachable!("accumulate continuation without a sink")
    }
}

const CHUNK_BITS: u32 = 12;
const CHUNK: usize = 1 << CHUNK_BITS;

/// Append-only storage in chunks of `CHUNK` elements. Once the first chunk
/// is full, growing never moves existing elements, so a large traversal
/// pays no reallocation copies.
struct Chunked<T> {
    chunks: Vec<Vec<T>>,
    len: usize,
}

impl<T> Default for Chunked<T> {
    fn default() -> Self {
        Chunked { chunks: Vec::new(), len: 0 }
    }
}

impl<T> Chunked<T> {
    fn with_capacity(n: usize) -> Self {
        let mut c = Chunked::default();
        c.chunks.reserve(n.div_ceil(CHUNK));
        c
    }

    fn len(&self) -> usize {
        self.len
    }

    #[inline]
    fn push(&mut self, value: T) {
        if self.len == 0 {
            // Small traversals stay in one ordinarily growing chunk.
            self.chunks.push(Vec::new());
        } else if self.len.is_multiple_of(CHUNK) {
            self.chunks.push(Vec::with_capacity(CHUNK));
        }
        let last = self.chunks.len() - 1;
        self.chunks[last].push(value);
        self.len += 1;
    }
}

impl<T> core::ops::Index<u32> for Chunked<T> {
    type Output = T;

    #[inline]
    fn index(&self, i: u32) -> &T {
        &self.chunks[(i >> CHUNK_BITS) as usize][i as usize & (CHUNK - 1)]
    }
}

impl<T> core::ops::IndexMut<u32> for Chunked<T> {
    #[inline]
    fn index_mut(&mut self, i: u32) -> &mut T {
        &mut self.chunks[(i >> CHUNK_BITS) as usize][i as usize & (CHUNK - 1)]
    }
}

/// Owner of a set of deferred cells and their continuations.
#[derive(Default)]
pub struct CellArena {
    cells: Chunked<Cell>,
    continuations: Chunked<Continuation>,
    pending: usize,
    worklist: Vec<CellId>,
}

impl CellArena {
    pub fn new() -> Self {
        CellArena::default()
    }

    pub fn with_capacity(cells: usize) -> Self {
        CellArena {
            cells: Chunked::with_capacity(cells),
            continuations: Chunked::with_capacity(cells / 2),
            ..CellArena::default()
        }
    }

    fn push(&mut self, value: f64, resolved: bool) -> CellId {
        let id = CellId(self.cells.len() as u32);
        self.cells.push(Cell { value, resolved, waiters: NIL });
        if !resolved {
            self.pending += 1;
        }
        id
    }

    /// A cell that is already resolved to `value`.
    pub fn resolved(&mut self, value: f64) -> CellId {
        self.push(value, true)
    }

    /// A fresh pending cell.
    pub fn pending(&mut self) -> CellId {
        self.push(0.0, false)
    }

    #[inline]
    pub fn value(&self, id: CellId) -> Option<f64> {
        let c = &self.cells[id.0];
        c.resolved.then_some(c.value)
    }

    #[inline]
    fn is_resolved(&self, id: CellId) -> bool {
        self.cells[id.0].resolved
    }

    /// Number of cells created so far.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.len() == 0
    }

    /// Number of cells still waiting for a value.
    pub fn pending_count(&self) -> usize {
        self.pending
    }

    /// A cell that resolves to `a * b` once both inputs have resolved.
    pub fn product(&mut self, a: CellId, b: CellId) -> CellId {
        self.binary(a, b, |a, b, out| Action::Product { a, b, out }, |x, y| x * y)
    }

    /// A cell that resolves to `a + b` once both inputs have resolved.
    pub fn sum(&mut self, a: CellId, b: CellId) -> CellId {
        self.binary(a, b, |a, b, out| Action::Sum { a, b, out }, |x, y| x + y)
    }

    #[inline]
    fn binary(
        &mut self,
        a: CellId,
        b: CellId,
        action: impl FnOnce(CellId, CellId, CellId) -> Action,
        op: impl FnOnce(f64, f64) -> f64,
    ) -> CellId {
        match (self.value(a), self.value(b)) {
            (Some(x), Some(y)) => self.resolved(op(x, y)),
            (ra, _) => {
                let out = self.pending();
                let wait_on = if ra.is_none() { a } else { b };
                self.register(wait_on, action(a, b, out));
                out
            }
        }
    }

    /// Resolves the pending cell `id` to `base * factor`: at once if `base`
    /// is resolved, otherwise as soon as it is. This saves allocating a
    /// separate cell for a factor that only becomes known after `id` was
    /// handed out.
    pub fn resolve_scaled(&mut self, id: CellId, base: CellId, factor: f64) -> Result<(), CellError> {
        self.resolve_scaled_into(id, base, factor, &mut NoSink)
    }

    pub(crate) fn resolve_scaled_into(
        &mut self,
        id: CellId,
        base: CellId,
        factor: f64,
        sink: &mut impl Sink,
    ) -> Result<(), CellError> {
        match self.value(base) {
            Some(b) => self.resolve_into(id, b * factor, sink),
            None => {
                let cell = &mut self.cells[id.0];
                if cell.resolved {
                    return Err(CellError::DoubleResolution(id));
                }
                cell.value = factor;
                self.register(base, Action::Scale { base, out: id });
                Ok(())
            }
        }
    }

    fn register(&mut self, on: CellId, action: Action) {
        let k = self.continuations.len() as u32;
        let head = &mut self.cells[on.0].waiters;
        self.continuations.push(Continuation { action, next: *head });
        *head = k;
    }

    fn relink(&mut self, k: u32, on: CellId) {
        let head = &mut self.cells[on.0].waiters;
        self.continuations[k].next = *head;
        *head = k;
    }

    /// Adds `src` into `sink[var]`: immediately if `src` is resolved,
    /// otherwise as soon as it resolves.
    #[inline]
    pub(crate) fn accumulate_when_resolved(
        &mut self,
        src: CellId,
        var: VarId,
        sink: &mut impl Sink,
    ) {
        match self.value(src) {
            Some(v) => sink.accumulate(var, v),
            None => self.register(src, Action::Accumulate { src, var }),
        }
    }

    /// Resolves a pending cell and runs everything that was waiting on it.
    pub fn resolve(&mut self, id: CellId, value: f64) -> Result<(), CellError> {
        self.resolve_into(id, value, &mut NoSink)
    }

    pub(crate) fn resolve_into(
        &mut self,
        id: CellId,
        value: f64,
        sink: &mut impl Sink,
    ) -> Result<(), CellError> {
        self.set(id, value)?;
        while let Some(cell) = self.worklist.pop() {
            let mut k = core::mem::replace(&mut self.cells[cell.0].waiters, NIL);
            while k != NIL {
                let next = self.continuations[k].next;
                self.fire(k, sink)?;
                k = next;
            }
        }
        Ok(())
    }

    fn set(&mut self, id: CellId, value: f64) -> Result<(), CellError> {
        let cell = &mut self.cells[id.0];
        if cell.resolved {
            return Err(CellError::DoubleResolution(id));
        }
        cell.value = value;
        cell.resolved = true;
        self.pending -= 1;
        if cell.waiters != NIL {
            self.worklist.push(id);
        }
        Ok(())
    }

    fn fire(&mut self, k: u32, sink: &mut impl Sink) -> Result<(), CellError> {
        let (a, b, out, product) = match self.continuations[k].action {
            Action::Accumulate { src, var } => {
                sink.accumulate(var, self.cells[src.0].value);
                return Ok(());
            }
            Action::Scale { base, out } => {
                let v = self.cells[base.0].value * self.cells[out.0].value;
                return self.set(out, v);
            }
            Action::Product { a, b, out } => (a, b, out, true),
            Action::Sum { a, b, out } => (a, b, out, false),
        };
        if !self.is_resolved(a) {
            self.relink(k, a);
        } else if !self.is_resolved(b) {
            self.relink(k, b);
        } else {
            let (x, y) = (self.cells[a.0].value, self.cells[b.0].value);
            self.set(out, if product { x * y } else { x + y })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_either_order() {
        let mut cells = CellArena::new();
        let (m, f) = (cells.pending(), cells.pending());
        let p = cells.product(m, f);
        cells.resolve(m, 2.0).unwrap();
        assert_eq!(cells.value(p), None);
        cells.resolve(f, 3.0).unwrap();
        assert_eq!(cells.value(p), Some(6.0));

        let mut cells = CellArena::new();
        let (m, f) = (cells.pending(), cells.pending());
        let p = cells.product(m, f);
        cells.resolve(f, 3.0).unwrap();
        cells.resolve(m, 2.0).unwrap();
        assert_eq!(cells.value(p), Some(6.0));
        assert_eq!(cells.pending_count(), 0);
    }

    #[test]
    fn scaled_waits_for_its_base() {
        let mut cells = CellArena::new();
        let m = cells.pending();
        let out = cells.pending();
        cells.resolve_scaled(out, m, 3.0).unwrap();
        assert_eq!(cells.value(out), None);
        cells.resolve(m, 2.0).unwrap();
        assert_eq!(cells.value(out), Some(6.0));
        assert_eq!(cells.pending_count(), 0);

        let one = cells.resolved(1.5);
        let now = cells.pending();
        cells.resolve_scaled(now, one, 2.0).unwrap();
        assert_eq!(cells.value(now), Some(3.0));
        assert_eq!(
            cells.resolve_scaled(now, one, 2.0),
            Err(CellError::DoubleResolution(now))
        );
    }

    #[test]
    fn chunks_hold_large_arenas() {
        let mut cells = CellArena::new();
        let root = cells.pending();
        let mut last = root;
        for _ in 0..3 * CHUNK {
            let next = cells.pending();
            cells.resolve_scaled(next, last, 1.0).unwrap();
            last = next;
        }
        cells.resolve(root, 0.5).unwrap();
        assert_eq!(cells.value(last), Some(0.5));
        assert_eq!(cells.pending_count(), 0);
        assert_eq!(cells.len(), 3 * CHUNK + 1);
    }

    #[test]
    fn resolved_inputs_compute_eagerly() {
        let mut cells = CellArena::new();
        let a = cells.resolved(4.0);
        let b = cells.resolved(0.5);
        let s = cells.sum(a, b);
        assert_eq!(cells.value(s), Some(4.5));
        assert_eq!(cells.pending_count(), 0);
    }

    #[test]
    fn chain_of_products_matches_eager_computation() {
        // Multipliers down a nested Mul: m1 = m0 * f, m2 = m1 * g, m3 = m2 * h,
        // with the factors arriving in an arbitrary order.
        let mut cells = CellArena::new();
        let m0 = cells.pending();
        let (f, g, h) = (cells.pending(), cells.pending(), cells.pending());
        let m1 = cells.product(m0, f);
        let m2 = cells.product(m1, g);
        let m3 = cells.product(m2, h);
        cells.resolve(h, 5.0).unwrap();
        cells.resolve(f, 3.0).unwrap();
        assert_eq!(cells.value(m3), None);
        cells.resolve(m0, 1.0).unwrap();
        assert_eq!(cells.value(m1), Some(3.0));
        assert_eq!(cells.value(m3), None);
        cells.resolve(g, 0.25).unwrap();
        let eager = ((1.0 * 3.0) * 0.25) * 5.0;
        assert_eq!(cells.value(m3), Some(eager));
        assert_eq!(cells.pending_count(), 0);
    }

    #[test]
    fn double_resolution_is_an_error() {
        let mut cells = CellArena::new();
        let c = cells.pending();
        cells.resolve(c, 1.0).unwrap();
        assert_eq!(cells.resolve(c, 2.0), Err(CellError::DoubleResolution(c)));
        let r = cells.resolved(1.0);
        assert!(cells.resolve(r, 1.0).is_err());
    }

    #[test]
    fn many_waiters_on_one_cell() {
        let mut cells = CellArena::new();
        let m = cells.pending();
        let outs: Vec<_> = (0..10)
            .map(|i| {
                let k = cells.resolved(i as f64);
                cells.product(m, k)
            })
            .collect();
        cells.resolve(m, 2.0).unwrap();
        for (i, o) in outs.into_iter().enumerate() {
            assert_eq!(cells.value(o), Some(2.0 * i as f64));
        }
    }

    #[test]
    fn accumulate_runs_on_resolution() {
        let mut grad = DenseGradient::zeros(2);
        let mut cells = CellArena::new();
        let m = cells.pending();
        let x2 = VarId::new(2).unwrap();
        cells.accumulate_when_resolved(m, x2, &mut grad);
        cells.accumulate_when_resolved(m, x2, &mut grad);
        assert_eq!(grad.values(), &[0.0, 0.0]);
        cells.resolve_into(m, 1.5, &mut grad).unwrap();
        assert_eq!(grad.values(), &[0.0, 3.0]);
    }
}
