//! The three scoring methods and strict-ranking construction.
//!
//! * Row sum: `s = R e`, the net preference balance of each object.
//! * Normalized row sum: `p_i = s_i / d_i`, the balance relative to how often
//!   the object was compared at all.
//! * Least squares: the solution of `L q = s` with scores summing to zero in
//!   every connected component, which adjusts net preferences by the strength
//!   of the opposition.
//!
//! Rankings are made strict with a deterministic tie-break: score, then total
//! preference count, then object key.

mod solver;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::graphcore::{components, ComponentPartition, DerivedMatrices};
use crate::prefmodel::ObjectKey;
use crate::value::Value;
use solver::ComponentScores;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("objects without any comparison: {}", .keys.join(", "))]
    IsolatedObjects { keys: Vec<String> },
    #[error("solver stopped at residual {residual:.3e} (tolerance {tolerance:.3e})")]
    NonConvergence { residual: f64, tolerance: f64 },
    #[error("component partition does not match the matrix")]
    PartitionMismatch,
    #[error("unknown scoring method {0:?}")]
    UnknownMethod(String),
}

/// Scoring method identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    RowSum,
    NormalizedRowSum,
    LeastSquares,
}

impl Method {
    pub const ALL: [Method; 3] = [
        Method::RowSum,
        Method::NormalizedRowSum,
        Method::LeastSquares,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Method::RowSum => "rs",
            Method::NormalizedRowSum => "nrs",
            Method::LeastSquares => "ls",
        }
    }
}

impl FromStr for Method {
    type Err = ScoringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s
            .trim()
            .to_ascii_lowercase()
            .replace(['-', '_'], "")
            .as_str()
        {
            "rs" | "rowsum" => Ok(Method::RowSum),
            "nrs" | "normalizedrowsum" | "normalisedrowsum" => Ok(Method::NormalizedRowSum),
            "ls" | "leastsquares" => Ok(Method::LeastSquares),
            _ => Err(ScoringError::UnknownMethod(s.to_string())),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Per-object scores for one method.
#[derive(Clone, Debug)]
pub struct ScoreVector {
    pub method: Method,
    pub values: Vec<Value>,
    /// Component partition the solve ran on (least squares only).
    pub partition: Option<ComponentPartition>,
}

/// Solver knobs. The defaults reproduce the worked examples exactly and
/// stay cheap at a few thousand objects.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Largest problem size solved in exact rational arithmetic when the
    /// inputs are exact.
    pub exact_max: usize,
    /// Largest component solved by direct dense factorization; bigger ones
    /// go to conjugate gradient.
    pub direct_max: usize,
    /// Relative residual tolerance for `L q = s`.
    pub tolerance: f64,
    /// Iteration budget factor: at most `factor * component size` CG steps.
    pub iteration_factor: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            exact_max: 16,
            direct_max: 2000,
            tolerance: 1e-10,
            iteration_factor: 10,
        }
    }
}

/// Row sum score: `s_i` is the sum of object `i`'s net preferences.
pub fn row_sum(derived: &DerivedMatrices) -> ScoreVector {
    let mut values = vec![Value::zero(); derived.len()];
    for (i, _, r) in derived.results().iter() {
        values[i] += r;
    }
    ScoreVector {
        method: Method::RowSum,
        values,
        partition: None,
    }
}

/// Normalized row sum score: `p_i = s_i / d_i`. Rejects inputs with
/// isolated objects, naming them.
pub fn normalized_row_sum(derived: &DerivedMatrices) -> Result<ScoreVector, ScoringError> {
    let isolated: Vec<String> = (0..derived.len())
        .filter(|&i| derived.degree(i).is_zero())
        .map(|i| derived.objects()[i].key.clone())
        .collect();
    if !isolated.is_empty() {
        return Err(ScoringError::IsolatedObjects { keys: isolated });
    }
    let sums = row_sum(derived);
    let values = sums
        .values
        .iter()
        .enumerate()
        .map(|(i, s)| s / derived.degree(i))
        .collect();
    Ok(ScoreVector {
        method: Method::NormalizedRowSum,
        values,
        partition: None,
    })
}

/// Least squares score: solves `L q = s` with scores summing to zero in
/// every component. Singleton components (including isolated objects) score
/// zero. Components solve independently and in parallel when the `parallel`
/// feature is enabled.
pub fn least_squares(
    derived: &DerivedMatrices,
    partition: &ComponentPartition,
    options: &SolveOptions,
) -> Result<ScoreVector, ScoringError> {
    check_partition(derived, partition)?;
    let groups = partition.members();

    #[cfg(feature = "parallel")]
    let solved: Vec<Result<ComponentScores, ScoringError>> = {
        use rayon::prelude::*;
        groups
            .par_iter()
            .map(|members| solve_component(derived, members, options))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let solved: Vec<Result<ComponentScores, ScoringError>> = groups
        .iter()
        .map(|members| solve_component(derived, members, options))
        .collect();

    assemble(derived, partition, &groups, solved, options)
}

/// Single-threaded least squares; the reference the parallel path must match.
pub fn least_squares_sequential(
    derived: &DerivedMatrices,
    partition: &ComponentPartition,
    options: &SolveOptions,
) -> Result<ScoreVector, ScoringError> {
    check_partition(derived, partition)?;
    let groups = partition.members();
    let solved: Vec<Result<ComponentScores, ScoringError>> = groups
        .iter()
        .map(|members| solve_component(derived, members, options))
        .collect();
    assemble(derived, partition, &groups, solved, options)
}

fn check_partition(
    derived: &DerivedMatrices,
    partition: &ComponentPartition,
) -> Result<(), ScoringError> {
    if partition.labels.len() != derived.len()
        || partition.labels.iter().any(|&c| c >= partition.count)
    {
        return Err(ScoringError::PartitionMismatch);
    }
    for (i, j, m) in derived.matches().iter() {
        if m.is_positive() && partition.labels[i] != partition.labels[j] {
            return Err(ScoringError::PartitionMismatch);
        }
    }
    Ok(())
}

fn solve_component(
    derived: &DerivedMatrices,
    members: &[usize],
    options: &SolveOptions,
) -> Result<ComponentScores, ScoringError> {
    let exact_wanted = derived.len() <= options.exact_max
        && derived.matches().is_exact()
        && derived.results().is_exact();
    if exact_wanted {
        if let Some(scores) = solver::solve_component_exact(derived, members) {
            return Ok(ComponentScores::Exact(scores));
        }
    }
    if members.len() <= options.direct_max {
        let mut scores = solver::solve_component_direct(derived, members);
        solver::center(&mut scores);
        Ok(ComponentScores::Approx(scores))
    } else {
        let budget = options
            .iteration_factor
            .saturating_mul(members.len())
            .max(50);
        match solver::solve_component_cg(derived, members, options.tolerance * 0.5, budget) {
            Ok((scores, _)) => Ok(ComponentScores::Approx(scores)),
            Err(residual) => Err(ScoringError::NonConvergence {
                residual,
                tolerance: options.tolerance,
            }),
        }
    }
}

fn assemble(
    derived: &DerivedMatrices,
    partition: &ComponentPartition,
    groups: &[Vec<usize>],
    solved: Vec<Result<ComponentScores, ScoringError>>,
    options: &SolveOptions,
) -> Result<ScoreVector, ScoringError> {
    let mut values = vec![Value::zero(); derived.len()];
    let mut any_approx = false;
    for (members, result) in groups.iter().zip(solved) {
        match result? {
            ComponentScores::Exact(scores) => {
                for (&g, q) in members.iter().zip(scores) {
                    values[g] = Value::Exact(q);
                }
            }
            ComponentScores::Approx(scores) => {
                any_approx = true;
                for (&g, q) in members.iter().zip(scores) {
                    values[g] = Value::Approx(q);
                }
            }
        }
    }
    if any_approx {
        verify_residual(derived, &values, options)?;
    }
    Ok(ScoreVector {
        method: Method::LeastSquares,
        values,
        partition: Some(partition.clone()),
    })
}

fn verify_residual(
    derived: &DerivedMatrices,
    values: &[Value],
    options: &SolveOptions,
) -> Result<(), ScoringError> {
    let q: Vec<f64> = values.iter().map(Value::to_f64).collect();
    let s: Vec<f64> = row_sum(derived).values.iter().map(Value::to_f64).collect();
    let lq = derived.apply_laplacian(&q);
    let residual = solver::norm(&lq.iter().zip(&s).map(|(a, b)| a - b).collect::<Vec<_>>());
    let allowed = options.tolerance * solver::norm(&s).max(1.0);
    if residual > allowed {
        return Err(ScoringError::NonConvergence {
            residual,
            tolerance: options.tolerance,
        });
    }
    Ok(())
}

/// One row of a strict ranking.
#[derive(Clone, Debug, Serialize)]
pub struct RankedObject {
    pub rank: usize,
    pub object: ObjectKey,
    pub score: Value,
    /// Total preference weight touching the object (its degree).
    pub preference_count: Value,
    pub component: usize,
}

/// Strict ranking after tie-breaking, best first, ranks `1..=n` without
/// gaps.
#[derive(Clone, Debug, Serialize)]
pub struct RankingTable {
    rows: Vec<RankedObject>,
}

impl RankingTable {
    pub fn rows(&self) -> &[RankedObject] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rank of the given object, 1-based.
    pub fn rank_of(&self, key: &ObjectKey) -> Option<usize> {
        self.rows.iter().find(|r| &r.object == key).map(|r| r.rank)
    }

    pub fn tie_break_descriptor() -> &'static str {
        "score desc, preference count desc, object key asc"
    }

    /// The ranking with best and worst exchanged.
    pub fn reversed(&self) -> RankingTable {
        let mut rows: Vec<RankedObject> = self.rows.iter().rev().cloned().collect();
        for (i, row) in rows.iter_mut().enumerate() {
            row.rank = i + 1;
        }
        RankingTable { rows }
    }
}

/// Breaks a score vector into a strict ranking: score descending, then
/// preference count descending, then object key ascending.
pub fn rank(scores: &ScoreVector, derived: &DerivedMatrices) -> RankingTable {
    let partition = match &scores.partition {
        Some(p) => p.clone(),
        None => components(derived),
    };
    let mut order: Vec<usize> = (0..derived.len()).collect();
    order.sort_by(|&a, &b| {
        scores.values[b]
            .cmp(&scores.values[a])
            .then_with(|| derived.degree(b).cmp(derived.degree(a)))
            .then_with(|| derived.objects()[a].key.cmp(&derived.objects()[b].key))
    });
    let rows = order
        .into_iter()
        .enumerate()
        .map(|(pos, i)| RankedObject {
            rank: pos + 1,
            object: derived.objects()[i].clone(),
            score: scores.values[i].clone(),
            preference_count: derived.degree(i).clone(),
            component: partition.labels[i],
        })
        .collect();
    RankingTable { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphcore::{derive, RankingProblem};
    use crate::prefmodel::Granularity;

    fn keys(names: &[&str]) -> Vec<ObjectKey> {
        names
            .iter()
            .map(|k| ObjectKey::new(Granularity::Faculty, *k))
            .collect()
    }

    fn five_object_problem() -> RankingProblem {
        let rows: [[i64; 5]; 5] = [
            [0, 0, 6, 6, 0],
            [0, 0, 10, 10, 0],
            [12, 20, 0, 6, 7],
            [12, 20, 6, 0, 0],
            [0, 0, 5, 0, 0],
        ];
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if a != 0 {
                    triplets.push((i, j, Value::from_int(a)));
                }
            }
        }
        RankingProblem::from_triplets(keys(&["X1", "X2", "X3", "X4", "X5"]), triplets).unwrap()
    }

    #[test]
    fn row_sum_on_demo_instance() {
        let derived = derive(&five_object_problem());
        let scores = row_sum(&derived);
        let expected = [-12, -20, 18, 16, -2];
        for (v, &e) in scores.values.iter().zip(&expected) {
            assert_eq!(*v, Value::from_int(e));
        }
    }

    #[test]
    fn normalized_row_sum_on_demo_instance() {
        let derived = derive(&five_object_problem());
        let scores = normalized_row_sum(&derived).unwrap();
        let expected = [(-20, 60), (-20, 60), (15, 60), (16, 60), (-10, 60)];
        for (v, &(n, d)) in scores.values.iter().zip(&expected) {
            assert_eq!(*v, Value::ratio(n, d));
        }
    }

    #[test]
    fn least_squares_exact_on_demo_instance() {
        let derived = derive(&five_object_problem());
        let partition = components(&derived);
        let scores = least_squares(&derived, &partition, &SolveOptions::default()).unwrap();
        let expected = [(-1, 6), (-1, 6), (1, 6), (1, 6), (0, 1)];
        for (v, &(n, d)) in scores.values.iter().zip(&expected) {
            assert_eq!(*v, Value::ratio(n, d));
            assert!(v.is_exact());
        }
    }

    #[test]
    fn least_squares_float_paths_agree_with_exact() {
        let derived = derive(&five_object_problem());
        let partition = components(&derived);
        let exact = least_squares(&derived, &partition, &SolveOptions::default()).unwrap();

        let direct_opts = SolveOptions {
            exact_max: 0,
            ..SolveOptions::default()
        };
        let direct = least_squares(&derived, &partition, &direct_opts).unwrap();

        let cg_opts = SolveOptions {
            exact_max: 0,
            direct_max: 0,
            ..SolveOptions::default()
        };
        let cg = least_squares(&derived, &partition, &cg_opts).unwrap();

        for i in 0..derived.len() {
            assert!((exact.values[i].to_f64() - direct.values[i].to_f64()).abs() < 1e-10);
            assert!((exact.values[i].to_f64() - cg.values[i].to_f64()).abs() < 1e-8);
        }
    }

    #[test]
    fn symmetric_matrix_scores_zero_everywhere() {
        let problem = RankingProblem::from_triplets(
            keys(&["a", "b", "c"]),
            vec![
                (0, 1, Value::from_int(2)),
                (1, 0, Value::from_int(2)),
                (1, 2, Value::from_int(5)),
                (2, 1, Value::from_int(5)),
            ],
        )
        .unwrap();
        let derived = derive(&problem);
        let partition = components(&derived);
        assert!(row_sum(&derived).values.iter().all(Value::is_zero));
        assert!(normalized_row_sum(&derived)
            .unwrap()
            .values
            .iter()
            .all(Value::is_zero));
        let ls = least_squares(&derived, &partition, &SolveOptions::default()).unwrap();
        assert!(ls.values.iter().all(Value::is_zero));
    }

    #[test]
    fn all_wins_normalizes_to_one() {
        let problem = RankingProblem::from_triplets(
            keys(&["winner", "x", "y"]),
            vec![
                (0, 1, Value::from_int(3)),
                (0, 2, Value::from_int(4)),
                (1, 2, Value::from_int(1)),
                (2, 1, Value::from_int(2)),
            ],
        )
        .unwrap();
        let scores = normalized_row_sum(&derive(&problem)).unwrap();
        assert_eq!(scores.values[0], Value::from_int(1));
    }

    #[test]
    fn isolated_object_rejected_by_normalized_row_sum() {
        let problem = RankingProblem::from_triplets(
            keys(&["a", "b", "lonely"]),
            vec![(0, 1, Value::from_int(1))],
        )
        .unwrap();
        let derived = derive(&problem);
        match normalized_row_sum(&derived) {
            Err(ScoringError::IsolatedObjects { keys }) => {
                assert_eq!(keys, vec!["lonely".to_string()]);
            }
            other => panic!("expected isolated-object rejection, got {other:?}"),
        }
        // row sum and least squares keep it at zero
        assert!(row_sum(&derived).values[2].is_zero());
        let partition = components(&derived);
        let ls = least_squares(&derived, &partition, &SolveOptions::default()).unwrap();
        assert!(ls.values[2].is_zero());
    }

    #[test]
    fn component_scores_sum_to_zero() {
        let problem = RankingProblem::from_triplets(
            keys(&["a", "b", "c", "d"]),
            vec![(0, 1, Value::from_int(3)), (2, 3, Value::from_int(7))],
        )
        .unwrap();
        let derived = derive(&problem);
        let partition = components(&derived);
        let ls = least_squares(&derived, &partition, &SolveOptions::default()).unwrap();
        assert_eq!(&ls.values[0] + &ls.values[1], Value::zero());
        assert_eq!(&ls.values[2] + &ls.values[3], Value::zero());
        assert!(!ls.values[0].is_zero());
    }

    #[test]
    fn rank_breaks_ties_by_count_then_key() {
        let problem = RankingProblem::from_triplets(
            keys(&["b", "a", "c"]),
            vec![
                // a and b tie at score 0 with different counts
                (0, 1, Value::from_int(5)),
                (1, 0, Value::from_int(5)),
                (1, 2, Value::from_int(1)),
                (2, 1, Value::from_int(1)),
            ],
        )
        .unwrap();
        let derived = derive(&problem);
        let scores = row_sum(&derived);
        let table = rank(&scores, &derived);
        // all scores zero; counts: b=10, a=12, c=2
        let order: Vec<&str> = table.rows().iter().map(|r| r.object.key.as_str()).collect();
        assert_eq!(order, vec!["a", "b", "c"]);
        assert_eq!(table.rows()[0].rank, 1);

        // fully tied: lexicographic
        let tied = RankingProblem::from_triplets(
            keys(&["z", "y"]),
            vec![(0, 1, Value::from_int(2)), (1, 0, Value::from_int(2))],
        )
        .unwrap();
        let derived = derive(&tied);
        let table = rank(&row_sum(&derived), &derived);
        let order: Vec<&str> = table.rows().iter().map(|r| r.object.key.as_str()).collect();
        assert_eq!(order, vec!["y", "z"]);
    }

    #[test]
    fn malformed_partition_is_rejected() {
        let derived = derive(&five_object_problem());
        let opts = SolveOptions::default();
        let wrong_len = ComponentPartition { labels: vec![0; 4], count: 1 };
        assert!(matches!(
            least_squares(&derived, &wrong_len, &opts),
            Err(ScoringError::PartitionMismatch)
        ));
        let label_past_count = ComponentPartition { labels: vec![0, 0, 0, 0, 1], count: 1 };
        assert!(matches!(
            least_squares(&derived, &label_past_count, &opts),
            Err(ScoringError::PartitionMismatch)
        ));
        let split_edge = ComponentPartition { labels: vec![0, 1, 0, 0, 0], count: 2 };
        assert!(matches!(
            least_squares(&derived, &split_edge, &opts),
            Err(ScoringError::PartitionMismatch)
        ));
    }

    #[test]
    fn parallel_and_sequential_least_squares_agree() {
        let derived = derive(&five_object_problem());
        let partition = components(&derived);
        let opts = SolveOptions {
            exact_max: 0,
            ..SolveOptions::default()
        };
        let a = least_squares(&derived, &partition, &opts).unwrap();
        let b = least_squares_sequential(&derived, &partition, &opts).unwrap();
        assert_eq!(a.values, b.values);
    }
}
