//! Sparse square matrix with deterministic row-major iteration.

use std::collections::BTreeMap;

use crate::value::Value;

/// Square matrix stored as sorted nonzero triplets. Zero entries are never
/// stored, so iteration order and equality are independent of construction
/// order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SparseMatrix {
    n: usize,
    entries: BTreeMap<(usize, usize), Value>,
}

impl SparseMatrix {
    pub fn new(n: usize) -> Self {
        SparseMatrix {
            n,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Value {
        self.entries.get(&(i, j)).cloned().unwrap_or_default()
    }

    /// Overwrites the entry; setting zero removes it.
    pub fn set(&mut self, i: usize, j: usize, v: Value) {
        debug_assert!(i < self.n && j < self.n);
        if v.is_zero() {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), v);
        }
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: &Value) {
        if v.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.entries.entry((i, j)) {
            Entry::Vacant(slot) => {
                slot.insert(v.clone());
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += v;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &Value)> {
        self.entries.iter().map(|(&(i, j), v)| (i, j, v))
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, &Value)> {
        self.entries
            .range((i, 0)..=(i, self.n.max(1) - 1))
            .map(|(&(_, j), v)| (j, v))
    }

    /// Merges another matrix into this one entrywise. The merge is
    /// commutative and associative, which is what lets aggregation fold
    /// per-student contributions in any order.
    pub fn merge(&mut self, other: &SparseMatrix) {
        debug_assert_eq!(self.n, other.n);
        for (i, j, v) in other.iter() {
            self.add_to(i, j, v);
        }
    }

    /// Converts every entry to floating point in place.
    pub fn degrade_to_approx(&mut self) {
        for v in self.entries.values_mut() {
            *v = v.to_approx();
        }
    }

    pub fn is_exact(&self) -> bool {
        self.entries.values().all(Value::is_exact)
    }

    /// Dense row-major copy. Intended for debug printing and small fixtures;
    /// callers guard the size.
    pub fn to_dense(&self) -> Vec<Vec<Value>> {
        let mut rows = vec![vec![Value::zero(); self.n]; self.n];
        for (i, j, v) in self.iter() {
            rows[i][j] = v.clone();
        }
        rows
    }
}
