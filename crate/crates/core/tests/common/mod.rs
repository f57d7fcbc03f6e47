//! Shared test support: the independent least-squares oracle and fixture
//! matrices.
//!
//! The oracle never touches the library's solver or derived-matrix code. It
//! assembles the normal equations of the weighted objective
//! `sum m_ij (r_ij/m_ij - (q_i - q_j))^2` straight from a dense preference
//! matrix, finds connected components by breadth-first search, appends one
//! zero-sum constraint per component, and solves the bordered system by
//! dense Gaussian elimination.

#![allow(dead_code)] // shared by several test binaries, none uses everything

use prefrank::prefmodel::{Granularity, ObjectKey};
use prefrank::{RankingProblem, Value};

/// Least-squares scores of a dense preference matrix, computed from first
/// principles.
pub fn oracle_least_squares(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    let mut matches = vec![vec![0.0f64; n]; n];
    let mut results = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            matches[i][j] = a[i][j] + a[j][i];
            results[i][j] = a[i][j] - a[j][i];
        }
    }

    // components by BFS over positive match entries
    let mut component = vec![usize::MAX; n];
    let mut count = 0;
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let mut queue = vec![start];
        component[start] = count;
        while let Some(i) = queue.pop() {
            for j in 0..n {
                if matches[i][j] > 0.0 && component[j] == usize::MAX {
                    component[j] = count;
                    queue.push(j);
                }
            }
        }
        count += 1;
    }

    // stationarity of the objective plus one zero-sum row per component
    let dim = n + count;
    let mut system = vec![vec![0.0f64; dim]; dim];
    let mut rhs = vec![0.0f64; dim];
    for i in 0..n {
        for j in i + 1..n {
            let m = matches[i][j];
            if m <= 0.0 {
                continue;
            }
            system[i][i] += m;
            system[j][j] += m;
            system[i][j] -= m;
            system[j][i] -= m;
            rhs[i] += results[i][j];
            rhs[j] += results[j][i];
        }
    }
    for i in 0..n {
        system[n + component[i]][i] = 1.0;
        system[i][n + component[i]] = 1.0;
    }

    let solution = solve_dense(system, rhs);
    solution[..n].to_vec()
}

/// Plain Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)] // rows of `a` alias during elimination
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        assert!(a[col][col].abs() > 1e-12, "oracle system is singular");
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                a[row][c] -= a[col][c] * factor;
            }
            b[row] -= b[col] * factor;
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    x
}

pub fn faculty_keys(names: &[&str]) -> Vec<ObjectKey> {
    names
        .iter()
        .map(|k| ObjectKey::new(Granularity::Faculty, *k))
        .collect()
}

pub fn problem_from_rows(names: &[&str], rows: &[Vec<Value>]) -> RankingProblem {
    let mut triplets = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_zero() {
                triplets.push((i, j, v.clone()));
            }
        }
    }
    RankingProblem::from_triplets(faculty_keys(names), triplets).unwrap()
}

pub fn int_rows(rows: &[&[i64]]) -> Vec<Vec<Value>> {
    rows.iter()
        .map(|r| r.iter().map(|&v| Value::from_int(v)).collect())
        .collect()
}

/// The five-object instance whose exact scores are known in closed form.
pub fn five_object_problem() -> RankingProblem {
    problem_from_rows(
        &["X1", "X2", "X3", "X4", "X5"],
        &int_rows(&[
            &[0, 0, 6, 6, 0],
            &[0, 0, 10, 10, 0],
            &[12, 20, 0, 6, 7],
            &[12, 20, 6, 0, 0],
            &[0, 0, 5, 0, 0],
        ]),
    )
}

pub const MEDICINE_FACULTIES: [&str; 7] = [
    "DE-AOK", "DE-FOK", "PTE-AOK", "SE-AOK", "SE-FOK", "SZTE-AOK", "SZTE-FOK",
];

pub const MEDICINE_MATRIX: [[i64; 7]; 7] = [
    [0, 138, 506, 127, 53, 308, 43],
    [146, 0, 144, 21, 37, 52, 76],
    [270, 87, 0, 140, 84, 273, 83],
    [634, 72, 778, 0, 244, 874, 68],
    [109, 178, 258, 101, 0, 129, 204],
    [560, 58, 835, 132, 49, 0, 72],
    [45, 137, 200, 17, 32, 122, 0],
];

/// Reference 7x7 unweighted matrix over seven Dentistry and Medicine
/// faculties.
pub fn medicine_problem() -> RankingProblem {
    let rows: Vec<&[i64]> = MEDICINE_MATRIX.iter().map(|r| r.as_slice()).collect();
    problem_from_rows(&MEDICINE_FACULTIES, &int_rows(&rows))
}

pub fn dense_f64(problem: &RankingProblem) -> Vec<Vec<f64>> {
    let n = problem.len();
    let mut rows = vec![vec![0.0; n]; n];
    for (i, j, v) in problem.matrix().iter() {
        rows[i][j] = v.to_f64();
    }
    rows
}
