//! Least-squares score solvers.
//!
//! The score vector solves `L q = s` per connected component with the
//! component's scores summing to zero. Three routes, picked by component
//! size and exactness of the input:
//!
//! * exact rational Gaussian elimination on the reduced system (small exact
//!   problems),
//! * dense LU with partial pivoting on the reduced system in `f64`,
//! * conjugate gradient on the centered system for large components.
//!
//! The reduced system drops the component's last object and substitutes it
//! from the zero-sum constraint, which makes the remaining square system
//! nonsingular on a connected component.

use num_rational::BigRational;
use num_traits::Zero;

use crate::graphcore::DerivedMatrices;

pub(crate) enum ComponentScores {
    Exact(Vec<BigRational>),
    Approx(Vec<f64>),
}

/// Exact reduced-system solve for one component. `members` lists the
/// component's object indices. Returns scores aligned with `members`.
pub(crate) fn solve_component_exact(
    derived: &DerivedMatrices,
    members: &[usize],
) -> Option<Vec<BigRational>> {
    let c = members.len();
    if c == 1 {
        return Some(vec![BigRational::zero()]);
    }
    let last = members[c - 1];
    // B[r][col] = l(i_r, j_col) - l(i_r, last), rhs = s_{i_r}
    let mut a = vec![vec![BigRational::zero(); c - 1]; c - 1];
    let mut b = vec![BigRational::zero(); c - 1];
    for (r, &gi) in members[..c - 1].iter().enumerate() {
        let li_last = derived.laplacian_entry(gi, last);
        let li_last = li_last.as_exact()?.clone();
        for (col, &gj) in members[..c - 1].iter().enumerate() {
            let lij = derived.laplacian_entry(gi, gj);
            a[r][col] = lij.as_exact()?.clone() - &li_last;
        }
        let mut s = BigRational::zero();
        for (_, v) in derived.results().row(gi) {
            s += v.as_exact()?;
        }
        b[r] = s;
    }
    let head = gauss_exact(a, b)?;
    let mut tail = BigRational::zero();
    for q in &head {
        tail -= q;
    }
    let mut scores = head;
    scores.push(tail);
    Some(scores)
}

/// Exact elimination in fraction-free (Bareiss) form: rows are scaled to
/// integers, eliminated with exact integer divisions, and back-substituted
/// in rationals only at the end. Far cheaper than rational elimination,
/// which pays a gcd on every operation.
#[allow(clippy::needless_range_loop)] // rows of `m` alias during elimination
fn gauss_exact(a: Vec<Vec<BigRational>>, b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    use num_bigint::BigInt;
    use num_integer::Integer;
    use num_traits::One;

    let n = b.len();
    if n == 0 {
        return Some(Vec::new());
    }
    // clear denominators row by row (a pure row scaling)
    let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    let mut c: Vec<BigInt> = Vec::with_capacity(n);
    for (row, rhs) in a.iter().zip(&b) {
        let mut scale = rhs.denom().clone();
        for v in row {
            scale = scale.lcm(v.denom());
        }
        m.push(row.iter().map(|v| v.numer() * (&scale / v.denom())).collect());
        c.push(rhs.numer() * (&scale / rhs.denom()));
    }

    let mut prev = BigInt::one();
    for k in 0..n {
        let pivot = (k..n).find(|&r| !m[r][k].is_zero())?;
        m.swap(k, pivot);
        c.swap(k, pivot);
        for i in k + 1..n {
            let lead = std::mem::take(&mut m[i][k]);
            for j in k + 1..n {
                m[i][j] = (&m[k][k] * &m[i][j] - &lead * &m[k][j]) / &prev;
            }
            c[i] = (&m[k][k] * &c[i] - &lead * &c[k]) / &prev;
        }
        prev = m[k][k].clone();
    }

    let mut x = vec![BigRational::zero(); n];
    for r in (0..n).rev() {
        let mut acc = BigRational::from_integer(c[r].clone());
        for j in r + 1..n {
            acc -= BigRational::from_integer(m[r][j].clone()) * &x[j];
        }
        x[r] = acc / BigRational::from_integer(m[r][r].clone());
    }
    Some(x)
}

/// Dense `f64` reduced-system solve for one component.
pub(crate) fn solve_component_direct(derived: &DerivedMatrices, members: &[usize]) -> Vec<f64> {
    let c = members.len();
    if c == 1 {
        return vec![0.0];
    }
    let last = members[c - 1];
    let mut a = vec![vec![0.0f64; c - 1]; c - 1];
    let mut b = vec![0.0f64; c - 1];
    for (r, &gi) in members[..c - 1].iter().enumerate() {
        let li_last = derived.laplacian_entry(gi, last).to_f64();
        for (col, &gj) in members[..c - 1].iter().enumerate() {
            a[r][col] = derived.laplacian_entry(gi, gj).to_f64() - li_last;
        }
        b[r] = derived.results().row(gi).map(|(_, v)| v.to_f64()).sum();
    }
    let head = gauss_f64(a, b);
    let tail = -head.iter().sum::<f64>();
    let mut scores = head;
    scores.push(tail);
    scores
}

#[allow(clippy::needless_range_loop)] // rows of `a` alias during elimination
fn gauss_f64(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("nonempty pivot range");
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            if a[r][col] == 0.0 {
                continue;
            }
            let factor = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= a[col][c] * factor;
            }
            b[r] -= b[col] * factor;
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in r + 1..n {
            acc -= a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
    }
    x
}

/// Conjugate gradient on the component-restricted Laplacian. Returns the
/// centered scores and the achieved residual norm, or the residual norm on
/// budget exhaustion.
pub(crate) fn solve_component_cg(
    derived: &DerivedMatrices,
    members: &[usize],
    tolerance: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, f64), f64> {
    let c = members.len();
    if c == 1 {
        return Ok((vec![0.0], 0.0));
    }
    let local: std::collections::HashMap<usize, usize> =
        members.iter().enumerate().map(|(l, &g)| (g, l)).collect();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); c];
    let mut degrees = vec![0.0f64; c];
    for (l, &g) in members.iter().enumerate() {
        degrees[l] = derived.degree(g).to_f64();
        for (j, m) in derived.matches().row(g) {
            rows[l].push((local[&j], m.to_f64()));
        }
    }
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y: Vec<f64> = (0..c).map(|i| degrees[i] * x[i]).collect();
        for (i, row) in rows.iter().enumerate() {
            for &(j, m) in row {
                y[i] -= m * x[j];
            }
        }
        y
    };

    let mut b: Vec<f64> = members
        .iter()
        .map(|&g| derived.results().row(g).map(|(_, v)| v.to_f64()).sum())
        .collect();
    // Project the right-hand side onto the range of the singular Laplacian
    // so the iteration stays well posed.
    let mean = b.iter().sum::<f64>() / c as f64;
    for v in &mut b {
        *v -= mean;
    }
    let b_norm = norm(&b);
    let threshold = tolerance * b_norm.max(1.0);

    let mut x = vec![0.0f64; c];
    let mut r = b;
    let mut rho = dot(&r, &r);
    if rho.sqrt() <= threshold {
        return Ok((x, rho.sqrt()));
    }
    let mut p = r.clone();
    for _ in 0..max_iterations {
        let ap = apply(&p);
        let alpha = rho / dot(&p, &ap);
        for i in 0..c {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rho_next = dot(&r, &r);
        if rho_next.sqrt() <= threshold {
            center(&mut x);
            return Ok((x, rho_next.sqrt()));
        }
        let beta = rho_next / rho;
        rho = rho_next;
        for i in 0..c {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(rho.sqrt())
}

pub(crate) fn center(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    for v in x.iter_mut() {
        *v -= mean;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
