//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use hpdiv::PointCloud;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` points uniform on `[-1, 1]^dim`; continuous, so ties have probability zero.
pub fn uniform_cloud(rng: &mut impl Rng, n: usize, dim: usize) -> PointCloud {
    let data = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    PointCloud::new(dim, data).unwrap()
}

/// Kruskal over all pairs with a union-find; returns `(a, b, length)` edges.
pub fn kruskal(cloud: &PointCloud) -> Vec<(usize, usize, f64)> {
    let n = cloud.len();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 = cloud
                .point(i)
                .iter()
                .zip(cloud.point(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            pairs.push((d2, i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut edges = Vec::with_capacity(n - 1);
    for (d2, i, j) in pairs {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            edges.push((i, j, d2.sqrt()));
            if edges.len() == n - 1 {
                break;
            }
        }
    }
    edges
}

/// Total length summed shortest first.
pub fn total_length(edges: &[(usize, usize, f64)]) -> f64 {
    let mut lengths: Vec<f64> = edges.iter().map(|e| e.2).collect();
    lengths.sort_by(f64::total_cmp);
    lengths.iter().sum()
}

pub fn constraint_matrix(l_values: &[f64], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d + 1, l_values.len(), |i, j| {
        if i == 0 {
            1.0
        } else {
            l_values[j].powf(i as f64 / d as f64)
        }
    })
}

/// Minimum-norm solution of `A w = e_1` through the SVD pseudoinverse.
pub fn pinv_weights(l_values: &[f64], d: usize) -> DVector<f64> {
    let a = constraint_matrix(l_values, d);
    let mut b = DVector::zeros(d + 1);
    b[0] = 1.0;
    a.pseudo_inverse(1e-300).unwrap() * b
}

/// Orthonormal basis of the null space of the constraint matrix, from the
/// full SVD of the matrix padded with zero rows to square.
pub fn null_basis(l_values: &[f64], d: usize) -> Vec<DVector<f64>> {
    let size = l_values.len();
    let a = constraint_matrix(l_values, d);
    let padded = DMatrix::from_fn(size, size, |i, j| if i <= d { a[(i, j)] } else { 0.0 });
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    order[..size - (d + 1)]
        .iter()
        .map(|&i| v_t.row(i).transpose())
        .collect()
}

/// Log-uniform index values on `[0.25, 64]`, between `d + 1` and `d + 4` of them.
pub fn random_l_values(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let count = rng.random_range(d + 1..=d + 4);
    (0..count)
        .map(|_| (rng.random_range(0.25f64.ln()..64f64.ln())).exp())
        .collect()
}

/// Checks feasibility, agreement with the pseudoinverse solution and that no
/// null-space step shortens `w`.
pub fn check_min_norm(
    rng: &mut impl Rng,
    l_values: &[f64],
    d: usize,
    w: &[f64],
) -> Result<(), String> {
    let w = DVector::from_column_slice(w);
    let mut target = DVector::zeros(d + 1);
    target[0] = 1.0;
    let residual = (constraint_matrix(l_values, d) * &w - target).amax();
    if residual > 1e-9 {
        return Err(format!("residual {residual:e} for l={l_values:?} d={d}"));
    }
    let reference = pinv_weights(l_values, d);
    let gap = (&w - &reference).norm();
    if gap > 1e-7 * reference.norm().max(1.0) {
        return Err(format!(
            "differs from pseudoinverse by {gap:e} for l={l_values:?} d={d}"
        ));
    }
    let basis = null_basis(l_values, d);
    let norm = w.norm();
    let rounds = if basis.is_empty() { 0 } else { 8 };
    for _ in 0..rounds {
        let mut z = DVector::zeros(l_values.len());
        for v in &basis {
            z += v * rng.random_range(-1.0..1.0);
        }
        for scale in [-1.0, -1e-2, -1e-6, 1e-6, 1e-2, 1.0] {
            let t = scale * norm / z.norm();
            let moved = (&w + &z * t).norm();
            if moved < norm * (1.0 - 1e-12) {
                return Err(format!(
                    "null-space step {scale} shortened |w| from {norm} to {moved} for l={l_values:?} d={d}"
                ));
            }
        }
    }
    Ok(())
}
