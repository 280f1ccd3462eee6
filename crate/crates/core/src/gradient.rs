//! Gradient containers.
//!
//! [`SparseGradient`] is an ordered map in which an absent variable means a
//! zero partial. [`DenseGradient`] is a zero-initialized array with one slot
//! per variable, updated in place.

use alloc::collections::btree_map::{self, BTreeMap};
use alloc::vec;
use alloc::vec::Vec;
use core::iter::Peekable;
use core::ops::Index;

use crate::expr::VarId;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseGradient {
    entries: BTreeMap<VarId, f64>,
}

impl SparseGradient {
    pub fn new() -> Self {
        SparseGradient::default()
    }

    pub fn singleton(var: VarId, value: f64) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(var, value);
        SparseGradient { entries }
    }

    /// The partial for `var`, zero when absent.
    pub fn get(&self, var: VarId) -> f64 {
        self.entries.get(&var).copied().unwrap_or(0.0)
    }

    /// Whether `var` has an explicit entry (possibly an explicit zero).
    pub fn contains(&self, var: VarId) -> bool {
        self.entries.contains_key(&var)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, f64)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    /// Inserts `value` for `var`, combining with an existing entry as
    /// `op(old, value)`.
    pub fn insert_with(&mut self, op: impl FnOnce(f64, f64) -> f64, var: VarId, value: f64) {
        match self.entries.entry(var) {
            btree_map::Entry::Vacant(slot) => {
                slot.insert(value);
            }
            btree_map::Entry::Occupied(mut slot) => {
                let old = *slot.get();
                *slot.get_mut() = op(old, value);
            }
        }
    }

    /// Pointwise combination; keys present on one side only are copied.
    pub fn merge(op: impl FnMut(f64, f64) -> f64, a: Self, b: Self) -> Self {
        SparseGradient { entries: union_with(a.entries, b.entries, op) }
    }

    /// Multiplies every entry by `factor`, keeping the key set.
    pub fn scale(factor: f64, g: Self) -> Self {
        let mut entries = g.entries;
        for v in entries.values_mut() {
            *v *= factor;
        }
        SparseGradient { entries }
    }

    /// Expands into a dense gradient over `n` variables.
    ///
    /// Panics if an entry lies beyond `n`.
    pub fn to_dense(&self, n: usize) -> DenseGradient {
        let mut dense = DenseGradient::zeros(n);
        for (var, value) in self.iter() {
            dense.values[var.slot()] = value;
        }
        dense
    }
}

impl FromIterator<(VarId, f64)> for SparseGradient {
    fn from_iter<I: IntoIterator<Item = (VarId, f64)>>(iter: I) -> Self {
        SparseGradient { entries: iter.into_iter().collect() }
    }
}

/// Union of two ordered maps in time linear in their sizes.
pub(crate) fn union_with<K: Ord, V>(
    a: BTreeMap<K, V>,
    b: BTreeMap<K, V>,
    op: impl FnMut(V, V) -> V,
) -> BTreeMap<K, V> {
    if a.is_empty() {
        return b;
    }
    if b.is_empty() {
        return a;
    }
    // Sorted input makes the collect a linear bulk build.
    MergeWith { a: a.into_iter().peekable(), b: b.into_iter().peekable(), op }.collect()
}

struct MergeWith<I: Iterator, F> {
    a: Peekable<I>,
    b: Peekable<I>,
    op: F,
}

impl<K: Ord, V, I: Iterator<Item = (K, V)>, F: FnMut(V, V) -> V> Iterator for MergeWith<I, F> {
    type Item = (K, V);

    fn next(&mut self) -> Option<(K, V)> {
        let order = match (self.a.peek(), self.b.peek()) {
            (Some((ka, _)), Some((kb, _))) => ka.cmp(kb),
            (Some(_), None) => return self.a.next(),
            (None, _) => return self.b.next(),
        };
        match order {
            core::cmp::Ordering::Less => self.a.next(),
            core::cmp::Ordering::Greater => self.b.next(),
            core::cmp::Ordering::Equal => {
                let (k, va) = self.a.next()?;
                let (_, vb) = self.b.next()?;
                Some((k, (self.op)(va, vb)))
            }
        }
    }
}

/// Fixed-size gradient indexed by [`VarId`].
#[derive(Clone, Debug, PartialEq)]
pub struct DenseGradient {
    values: Vec<f64>,
}

impl DenseGradient {
    pub fn zeros(n: usize) -> Self {
        DenseGradient { values: vec![0.0; n] }
    }

    /// In-place `self[var] += value`.
    #[inline]
    pub fn add(&mut self, var: VarId, value: f64) {
        let slot = &mut self.values[var.slot()];
        *slot += value;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Entries as a sparse map, including explicit zeros.
    pub fn to_sparse(&self) -> SparseGradient {
        self.values.iter().enumerate().map(|(i, v)| (VarId::from_slot(i), *v)).collect()
    }
}

impl Index<usize> for DenseGradient {
    type Output = f64;

    /// One-based access, matching variable indices.
    fn index(&self, index: usize) -> &f64 {
        &self.values[index - 1]
    }
}

impl Index<VarId> for DenseGradient {
    type Output = f64;

    fn index(&self, var: VarId) -> &f64 {
        &self.values[var.slot()]
    }
}
