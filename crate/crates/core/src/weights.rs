//! Minimum-norm ensemble weights for the weighted nearest neighbor estimator.
//!
//! Given index values `l_1..l_L` and dimension `d`, the weights solve
//!
//! ```text
//! minimize ||w||_2  subject to  sum_j w_j = 1,
//!                               sum_j w_j l_j^(i/d) = 0   for i = 1..d
//! ```
//!
//! The constraint matrix `A` is `(d+1) x L` with a row of ones followed by the
//! rows `l_j^(i/d)`. The minimum-norm solution lies in the row space of `A`,
//! so it is computed from a Householder QR factorization of `A^T`: with
//! `A^T = Q R`, `R^T z = e_1` and `w = Q z`. When `L = d + 1` the system is
//! square and is solved directly by partially pivoted elimination instead.

use serde::Serialize;

use crate::error::{Error, Result};

/// Reciprocal condition estimate of `A A^T` below which the system is rejected.
pub const MIN_RCOND: f64 = 1e-12;

/// Solved ensemble weights together with the neighbor counts they apply to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSchedule {
    pub l_values: Vec<f64>,
    pub d: usize,
    #[serde(rename = "weights")]
    pub w: Vec<f64>,
    /// `K(l) = floor(l sqrt(N))`, one per index value.
    pub k_values: Vec<usize>,
    pub n: usize,
}

impl WeightSchedule {
    /// Pairs of `(K(l), W(l))` in index-value order.
    pub fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.k_values.iter().copied().zip(self.w.iter().copied())
    }

    pub fn max_k(&self) -> usize {
        self.k_values.iter().copied().max().unwrap_or(0)
    }
}

/// Rows of the constraint matrix: ones, then `l^(i/d)` for `i = 1..d`.
pub fn constraint_matrix(l_values: &[f64], d: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0; l_values.len()]];
    for i in 1..=d {
        let exponent = i as f64 / d as f64;
        rows.push(l_values.iter().map(|l| l.powf(exponent)).collect());
    }
    rows
}

/// `A w - b` for the constraint system, one entry per constraint.
pub fn constraint_residuals(l_values: &[f64], d: usize, w: &[f64]) -> Vec<f64> {
    constraint_matrix(l_values, d)
        .iter()
        .enumerate()
        .map(|(row_idx, row)| {
            let target = if row_idx == 0 { 1.0 } else { 0.0 };
            row.iter().zip(w).map(|(a, x)| a * x).sum::<f64>() - target
        })
        .collect()
}

fn check_l_values(l_values: &[f64], d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidLValues("dimension must be at least 1".into()));
    }
    if let Some(bad) = l_values.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(Error::InvalidLValues(format!(
            "index values must be positive and finite, got {bad}"
        )));
    }
    for (a, la) in l_values.iter().enumerate() {
        if l_values[a + 1..].contains(la) {
            return Err(Error::InvalidLValues(format!("duplicate index value {la}")));
        }
    }
    if l_values.len() < d + 1 {
        // Fewer columns than constraints: A A^T has rank at most L < d + 1.
        return Err(Error::SingularConstraints { rcond: 0.0 });
    }
    Ok(())
}

/// Householder QR of a column-major `rows x cols` matrix (`rows >= cols`).
///
/// Returns the reflectors (one per column, each of length `rows - j`) and the
/// upper-triangular factor, row-major `cols x cols`.
fn householder_qr(mut cols_data: Vec<Vec<f64>>, rows: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let cols = cols_data.len();
    let mut reflectors = Vec::with_capacity(cols);
    for j in 0..cols {
        let x = &cols_data[j][j..];
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|e| e * e).sum();
        if vnorm2 > 0.0 {
            for col in cols_data.iter_mut().skip(j) {
                let dot: f64 = v.iter().zip(&col[j..]).map(|(a, b)| a * b).sum();
                let scale = 2.0 * dot / vnorm2;
                for (c, vi) in col[j..].iter_mut().zip(&v) {
                    *c -= scale * vi;
                }
            }
        }
        reflectors.push(v);
    }
    let r = (0..cols)
        .map(|i| {
            (0..cols)
                .map(|j| if j >= i { cols_data[j][i] } else { 0.0 })
                .collect()
        })
        .collect();
    debug_assert!(reflectors.iter().all(|v| v.len() <= rows));
    (reflectors, r)
}

/// Singular values of a small square matrix by one-sided Jacobi rotations.
fn singular_values(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    // Work on columns.
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| a.iter().map(|row| row[j]).collect())
        .collect();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|v| v * v).sum();
                let beta: f64 = cols[q].iter().map(|v| v * v).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * x - s * y;
                    cols[q][i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    cols.iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

/// Solves the square system `A w = b` by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()).then(s.cmp(&r)))
            .unwrap_or(col);
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for c in col..n {
                    a[row][c] -= factor * a[col][c];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

/// Minimum-Euclidean-norm weights satisfying the ensemble constraints.
pub fn solve_weights(l_values: &[f64], d: usize) -> Result<Vec<f64>> {
    check_l_values(l_values, d)?;
    let a = constraint_matrix(l_values, d);
    let big_l = l_values.len();
    let m = d + 1;

    // Columns of A^T are the rows of A.
    let (reflectors, r) = householder_qr(a.clone(), big_l);
    // A A^T = R^T R, so its condition number is the squared one of R.
    let sv = singular_values(&r);
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let rcond = if max > 0.0 { (min / max).powi(2) } else { 0.0 };
    if !(rcond >= MIN_RCOND) {
        return Err(Error::SingularConstraints { rcond });
    }

    let mut b = vec![0.0; m];
    b[0] = 1.0;
    if big_l == m {
        return Ok(solve_square(a, b));
    }

    // Forward substitution for R^T z = b.
    let mut z = vec![0.0; big_l];
    for i in 0..m {
        let acc: f64 = (0..i).map(|j| r[j][i] * z[j]).sum();
        z[i] = (b[i] - acc) / r[i][i];
    }
    // w = Q z, applying reflectors last to first.
    for (j, v) in reflectors.iter().enumerate().rev() {
        let vnorm2: f64 = v.iter().map(|e| e * e).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let dot: f64 = v.iter().zip(&z[j..]).map(|(a, b)| a * b).sum();
        let scale = 2.0 * dot / vnorm2;
        for (zi, vi) in z[j..].iter_mut().zip(v) {
            *zi -= scale * vi;
        }
    }
    Ok(z)
}

/// `count` evenly spaced index values on `[1, 3]`; `count` defaults to `d + 3`.
pub fn default_l_values(d: usize, count: Option<usize>) -> Vec<f64> {
    let count = count.unwrap_or(d + 3);
    match count {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..count)
            .map(|j| 1.0 + 2.0 * j as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// `floor(l sqrt(n))` for each index value.
pub fn k_for_l(l_values: &[f64], n: usize) -> Vec<usize> {
    let root = (n as f64).sqrt();
    l_values
        .iter()
        .map(|l| (l * root).floor() as usize)
        .collect()
}

/// Solves the weights and fixes `K(l)` for a first sample of size `n` within a
/// pooled sample of `total` points.
pub fn resolve_schedule(
    l_values: &[f64],
    d: usize,
    n: usize,
    total: usize,
) -> Result<WeightSchedule> {
    let w = solve_weights(l_values, d)?;
    let k_values = k_for_l(l_values, n);
    for (j, (&k, &l)) in k_values.iter().zip(l_values).enumerate() {
        if k == 0 {
            return Err(Error::KTooSmall { l });
        }
        if let Some(other) = (0..j).find(|&o| k_values[o] == k) {
            return Err(Error::KCollision {
                first: l_values[other],
                second: l,
                k,
            });
        }
    }
    let available = total.saturating_sub(1);
    if let Some(&k) = k_values.iter().find(|&&k| k > available) {
        return Err(Error::KTooLarge { k, available });
    }
    Ok(WeightSchedule {
        l_values: l_values.to_vec(),
        d,
        w,
        k_values,
        n,
    })
}
