//! Ranking evaluation: contradictory-preference counts and Kendall rank
//! correlation between strict rankings.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::graphcore::RankingProblem;
use crate::prefmodel::ObjectKey;
use crate::scoring::RankingTable;
use crate::value::Value;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("ranking is missing object {0:?}")]
    MissingObject(String),
    #[error("rankings cover different object sets")]
    ObjectSetMismatch,
}

/// How much preference weight points against a ranking.
#[derive(Clone, Debug, Serialize)]
pub struct ContradictionReport {
    /// Total weight of entries `a_ij` where the ranking puts `j` above `i`.
    pub count: Value,
    /// Total preference weight in the matrix.
    pub total: Value,
    /// `count / total`, or zero for an empty matrix.
    pub ratio: f64,
}

/// Kendall rank correlation between two strict rankings.
#[derive(Clone, Debug, Serialize)]
pub struct CorrelationReport {
    pub tau: f64,
    pub concordant: u64,
    pub discordant: u64,
    pub pairs: u64,
}

/// Sums the preference weight contradicting a strict ranking: every entry
/// `a_ij` whose direction the ranking reverses.
pub fn contradictions(
    problem: &RankingProblem,
    ranking: &RankingTable,
) -> Result<ContradictionReport, MetricsError> {
    let position = position_index(ranking);
    let resolve = |key: &ObjectKey| {
        position
            .get(key)
            .copied()
            .ok_or_else(|| MetricsError::MissingObject(key.key.clone()))
    };
    let mut count = Value::zero();
    let mut total = Value::zero();
    for (i, j, a) in problem.matrix().iter() {
        total += a;
        let pi = resolve(&problem.objects()[i])?;
        let pj = resolve(&problem.objects()[j])?;
        if pj < pi {
            count += a;
        }
    }
    let ratio = if total.is_zero() {
        0.0
    } else {
        count.to_f64() / total.to_f64()
    };
    Ok(ContradictionReport {
        count,
        total,
        ratio,
    })
}

/// Kendall rank correlation over all object pairs of two strict rankings of
/// the same object set. With no ties, `tau = (C - D) / (n(n-1)/2)`.
pub fn kendall(r1: &RankingTable, r2: &RankingTable) -> Result<CorrelationReport, MetricsError> {
    if r1.len() != r2.len() {
        return Err(MetricsError::ObjectSetMismatch);
    }
    let p2 = position_index(r2);
    // positions in r2 listed in r1 order
    let mut order = Vec::with_capacity(r1.len());
    for row in r1.rows() {
        match p2.get(&row.object) {
            Some(&p) => order.push(p),
            None => return Err(MetricsError::ObjectSetMismatch),
        }
    }
    let mut concordant = 0u64;
    let mut discordant = 0u64;
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            if order[i] < order[j] {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let pairs = concordant + discordant;
    let tau = if pairs == 0 {
        1.0
    } else {
        (concordant as f64 - discordant as f64) / pairs as f64
    };
    Ok(CorrelationReport {
        tau,
        concordant,
        discordant,
        pairs,
    })
}

fn position_index(ranking: &RankingTable) -> HashMap<ObjectKey, usize> {
    ranking
        .rows()
        .iter()
        .map(|r| (r.object.clone(), r.rank))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphcore::{components, derive};
    use crate::prefmodel::Granularity;
    use crate::scoring::{least_squares, rank, row_sum, SolveOptions};

    fn keys(names: &[&str]) -> Vec<ObjectKey> {
        names
            .iter()
            .map(|k| ObjectKey::new(Granularity::Faculty, *k))
            .collect()
    }

    fn chain_problem(names: &[&str]) -> RankingProblem {
        // i beats i+1 by one preference
        let triplets = (0..names.len() - 1)
            .map(|i| (i, i + 1, Value::from_int(1)))
            .collect::<Vec<_>>();
        RankingProblem::from_triplets(keys(names), triplets).unwrap()
    }

    #[test]
    fn agreeing_ranking_has_no_contradictions() {
        let problem = chain_problem(&["a", "b", "c", "d"]);
        let derived = derive(&problem);
        let table = rank(&row_sum(&derived), &derived);
        let report = contradictions(&problem, &table).unwrap();
        assert!(report.count.is_zero());
        assert_eq!(report.ratio, 0.0);
        assert_eq!(report.total, Value::from_int(3));
    }

    #[test]
    fn reversed_ranking_contradicts_everything() {
        let problem = chain_problem(&["a", "b", "c"]);
        let derived = derive(&problem);
        let table = rank(&row_sum(&derived), &derived).reversed();
        let report = contradictions(&problem, &table).unwrap();
        assert_eq!(report.count, Value::from_int(2));
        assert_eq!(report.ratio, 1.0);
    }

    #[test]
    fn missing_object_is_reported() {
        let problem = chain_problem(&["a", "b", "c"]);
        let smaller = chain_problem(&["a", "b"]);
        let derived = derive(&smaller);
        let table = rank(&row_sum(&derived), &derived);
        assert!(matches!(
            contradictions(&problem, &table),
            Err(MetricsError::MissingObject(_))
        ));
    }

    #[test]
    fn kendall_extremes() {
        let problem = chain_problem(&["a", "b", "c", "d", "e"]);
        let derived = derive(&problem);
        let table = rank(&row_sum(&derived), &derived);
        assert_eq!(kendall(&table, &table).unwrap().tau, 1.0);
        assert_eq!(kendall(&table, &table.reversed()).unwrap().tau, -1.0);
    }

    #[test]
    fn kendall_single_adjacent_swap() {
        // brute force over the 6 pairs of 4 objects: 5 concordant, 1
        // discordant, tau = 4/6 = 2/3
        let problem = chain_problem(&["a", "b", "c", "d"]);
        let derived = derive(&problem);
        let base = rank(&row_sum(&derived), &derived);

        // row sums (5, -3, 1, -3); the b/d tie breaks on preference count
        let swapped_problem = RankingProblem::from_triplets(
            keys(&["a", "b", "c", "d"]),
            vec![
                (0, 1, Value::from_int(5)),
                (2, 1, Value::from_int(1)),
                (1, 3, Value::from_int(3)),
            ],
        )
        .unwrap();
        let derived2 = derive(&swapped_problem);
        let swapped = rank(&row_sum(&derived2), &derived2);
        let order: Vec<&str> = swapped
            .rows()
            .iter()
            .map(|r| r.object.key.as_str())
            .collect();
        assert_eq!(order, vec!["a", "c", "b", "d"]);

        let report = kendall(&base, &swapped).unwrap();
        assert_eq!(report.concordant, 5);
        assert_eq!(report.discordant, 1);
        assert!((report.tau - 2.0 / 3.0).abs() < 1e-15);

        // symmetric in its arguments
        let back = kendall(&swapped, &base).unwrap();
        assert_eq!(back.tau, report.tau);
    }

    #[test]
    fn contradictions_with_least_squares_ranking() {
        let problem = chain_problem(&["a", "b", "c"]);
        let derived = derive(&problem);
        let partition = components(&derived);
        let ls = least_squares(&derived, &partition, &SolveOptions::default()).unwrap();
        let table = rank(&ls, &derived);
        let report = contradictions(&problem, &table).unwrap();
        assert!(report.count.is_zero());
    }
}
