//! Ranking-problem algebra: derived matrices, degrees, Laplacian, and
//! connected components of the comparison graph.

mod sparse;
mod unionfind;

pub use sparse::SparseMatrix;

use serde::Serialize;
use thiserror::Error;

use crate::prefmodel::ObjectKey;
use crate::value::Value;
use unionfind::UnionFind;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("a ranking problem needs at least one object")]
    EmptyObjectSet,
    #[error("duplicate object key {0:?}")]
    DuplicateObject(String),
    #[error("nonzero diagonal entry at object index {0}")]
    DiagonalEntry(usize),
    #[error("negative preference intensity at ({i}, {j})")]
    NegativeEntry { i: usize, j: usize },
    #[error("entry index ({i}, {j}) outside the {n} objects")]
    IndexOutOfBounds { i: usize, j: usize, n: usize },
}

/// A set of objects plus a nonnegative preference matrix with zero diagonal.
#[derive(Clone, Debug)]
pub struct RankingProblem {
    objects: Vec<ObjectKey>,
    matrix: SparseMatrix,
}

impl RankingProblem {
    /// Builds a problem from triplets `(i, j, intensity)`, validating the
    /// invariants: nonnegative entries, zero diagonal, distinct object keys.
    pub fn from_triplets(
        objects: Vec<ObjectKey>,
        triplets: impl IntoIterator<Item = (usize, usize, Value)>,
    ) -> Result<Self, GraphError> {
        let n = objects.len();
        if n == 0 {
            return Err(GraphError::EmptyObjectSet);
        }
        for (idx, obj) in objects.iter().enumerate() {
            if objects[..idx].contains(obj) {
                return Err(GraphError::DuplicateObject(obj.key.clone()));
            }
        }
        let mut matrix = SparseMatrix::new(n);
        for (i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(GraphError::IndexOutOfBounds { i, j, n });
            }
            if i == j {
                if !v.is_zero() {
                    return Err(GraphError::DiagonalEntry(i));
                }
                continue;
            }
            if v.is_negative() {
                return Err(GraphError::NegativeEntry { i, j });
            }
            matrix.add_to(i, j, &v);
        }
        Ok(RankingProblem { objects, matrix })
    }

    /// Like [`from_triplets`](Self::from_triplets) but takes an already
    /// validated matrix built by the aggregation layer.
    pub(crate) fn from_matrix(objects: Vec<ObjectKey>, matrix: SparseMatrix) -> Self {
        debug_assert_eq!(objects.len(), matrix.dim());
        RankingProblem { objects, matrix }
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn objects(&self) -> &[ObjectKey] {
        &self.objects
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn intensity(&self, i: usize, j: usize) -> Value {
        self.matrix.get(i, j)
    }

    pub fn index_of(&self, key: &ObjectKey) -> Option<usize> {
        self.objects.iter().position(|o| o == key)
    }

    /// Total preference weight in the matrix.
    pub fn total_weight(&self) -> Value {
        let mut total = Value::zero();
        for (_, _, v) in self.matrix.iter() {
            total += v;
        }
        total
    }

    /// Removes objects that appear in no comparison at all, returning the
    /// reduced problem and the keys that were dropped. `None` when nothing
    /// is compared at all (a ranking problem needs at least one object).
    pub fn drop_isolated(&self) -> (Option<RankingProblem>, Vec<ObjectKey>) {
        let derived = derive(self);
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| !derived.degree(i).is_zero())
            .collect();
        if keep.len() == self.len() {
            return (Some(self.clone()), Vec::new());
        }
        let dropped: Vec<ObjectKey> = (0..self.len())
            .filter(|i| !keep.contains(i))
            .map(|i| self.objects[i].clone())
            .collect();
        if keep.is_empty() {
            return (None, dropped);
        }
        let remap: std::collections::HashMap<usize, usize> = keep
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new))
            .collect();
        let objects: Vec<ObjectKey> = keep.iter().map(|&i| self.objects[i].clone()).collect();
        let mut matrix = SparseMatrix::new(objects.len());
        for (i, j, v) in self.matrix.iter() {
            if let (Some(&ni), Some(&nj)) = (remap.get(&i), remap.get(&j)) {
                matrix.add_to(ni, nj, v);
            }
        }
        (Some(RankingProblem { objects, matrix }), dropped)
    }
}

/// Results matrix, matches matrix, degrees, and the implied Laplacian of a
/// ranking problem.
#[derive(Clone, Debug)]
pub struct DerivedMatrices {
    objects: Vec<ObjectKey>,
    results: SparseMatrix,
    matches: SparseMatrix,
    degrees: Vec<Value>,
}

impl DerivedMatrices {
    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn objects(&self) -> &[ObjectKey] {
        &self.objects
    }

    /// Skew-symmetric net-preference matrix.
    pub fn results(&self) -> &SparseMatrix {
        &self.results
    }

    /// Symmetric total-comparison matrix; its nonzeros are the edges of the
    /// comparison graph.
    pub fn matches(&self) -> &SparseMatrix {
        &self.matches
    }

    /// Total comparison weight touching object `i`.
    pub fn degree(&self, i: usize) -> &Value {
        &self.degrees[i]
    }

    pub fn degrees(&self) -> &[Value] {
        &self.degrees
    }

    /// Laplacian entry: degree on the diagonal, negated match weight off it.
    pub fn laplacian_entry(&self, i: usize, j: usize) -> Value {
        if i == j {
            self.degrees[i].clone()
        } else {
            -&self.matches.get(i, j)
        }
    }

    /// Explicit sparse Laplacian, diagonal included.
    pub fn laplacian(&self) -> SparseMatrix {
        let n = self.len();
        let mut l = SparseMatrix::new(n);
        for (i, j, v) in self.matches.iter() {
            l.set(i, j, -v);
        }
        for (i, d) in self.degrees.iter().enumerate() {
            l.set(i, i, d.clone());
        }
        l
    }

    /// `y = L x` in floating point, used by the iterative solver.
    pub fn apply_laplacian(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        let mut y: Vec<f64> = (0..n).map(|i| self.degrees[i].to_f64() * x[i]).collect();
        for (i, j, v) in self.matches.iter() {
            y[i] -= v.to_f64() * x[j];
        }
        y
    }
}

/// Computes the results matrix, matches matrix, and degrees. Exact inputs
/// yield exact outputs.
pub fn derive(problem: &RankingProblem) -> DerivedMatrices {
    let n = problem.len();
    let mut results = SparseMatrix::new(n);
    let mut matches = SparseMatrix::new(n);
    for (i, j, a) in problem.matrix.iter() {
        results.add_to(i, j, a);
        results.add_to(j, i, &-a);
        matches.add_to(i, j, a);
        matches.add_to(j, i, a);
    }
    let mut degrees = vec![Value::zero(); n];
    for (i, _, m) in matches.iter() {
        degrees[i] += m;
    }
    DerivedMatrices {
        objects: problem.objects.clone(),
        results,
        matches,
        degrees,
    }
}

/// Weakly connected components of the comparison graph. Component ids are
/// assigned in order of first appearance, so they are deterministic for a
/// fixed object ordering.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentPartition {
    pub labels: Vec<usize>,
    pub count: usize,
}

impl ComponentPartition {
    /// Object indices grouped by component id.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.count];
        for (i, &c) in self.labels.iter().enumerate() {
            groups[c].push(i);
        }
        groups
    }
}

/// Finds weakly connected components over the nonzero entries of the matches
/// matrix. Isolated objects become singleton components.
pub fn components(derived: &DerivedMatrices) -> ComponentPartition {
    let n = derived.len();
    let mut uf = UnionFind::new(n);
    for (i, j, m) in derived.matches.iter() {
        if m.is_positive() {
            uf.union(i, j);
        }
    }
    let mut labels = vec![usize::MAX; n];
    let mut count = 0;
    for i in 0..n {
        let root = uf.find(i);
        if labels[root] == usize::MAX {
            labels[root] = count;
            count += 1;
        }
        labels[i] = labels[root];
    }
    ComponentPartition { labels, count }
}
