//! Random instance generators shared by the integration tests. Every
//! generator uses integer data so that the intended symmetries hold exactly
//! in floating point.

#![allow(dead_code)]

use liftqp::{QpInstance, SparseMatrix};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A QP invariant under the cyclic shift of `r` copies of a `k`-variable,
/// `l`-constraint block, with a strictly feasible point `x0`.
pub struct BlockSymmetric {
    pub qp: QpInstance,
    pub x0: Vec<f64>,
    pub r: usize,
}

fn circulant(r: usize, rows: usize, cols: usize, blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(r * rows, r * cols, |i, j| {
        let (a, p) = (i / rows, i % rows);
        let (b, q) = (j / cols, j % cols);
        blocks[(b + r - a) % r][(p, q)]
    })
}

fn small_int(rng: &mut ChaCha8Rng, lo: i32, hi: i32, zero_prob: f64) -> f64 {
    if rng.random_bool(zero_prob) {
        0.0
    } else {
        rng.random_range(lo..=hi) as f64
    }
}

pub fn block_symmetric(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> BlockSymmetric {
    let r = rng.random_range(2..=6);
    let k = rng.random_range(1..=(max_n / r).max(1));
    let l = rng.random_range(1..=(max_m / r).max(1));
    let n = r * k;
    let m = r * l;
    let g: Vec<DMatrix<f64>> = (0..r).map(|_| DMatrix::from_fn(k, k, |_, _| small_int(rng, -2, 2, 0.4))).collect();
    let h: Vec<DMatrix<f64>> = (0..r).map(|_| DMatrix::from_fn(l, k, |_, _| small_int(rng, -3, 3, 0.5))).collect();
    let mg = circulant(r, k, k, &g);
    let q = mg.transpose() * &mg + DMatrix::identity(n, n);
    let a = circulant(r, l, k, &h);
    let base_c: Vec<f64> = (0..k).map(|_| small_int(rng, -5, 5, 0.2)).collect();
    let base_x: Vec<f64> = (0..k).map(|_| rng.random_range(-2..=2) as f64).collect();
    let base_slack: Vec<f64> = (0..l).map(|_| rng.random_range(1..=4) as f64).collect();
    let c: Vec<f64> = (0..n).map(|i| base_c[i % k]).collect();
    let x0: Vec<f64> = (0..n).map(|i| base_x[i % k]).collect();
    let ax = &a * nalgebra::DVector::from_column_slice(&x0);
    let b: Vec<f64> = (0..m).map(|i| ax[i] + base_slack[i % l]).collect();
    let qp = QpInstance::new(SparseMatrix::from_dense(&q).unwrap(), c, SparseMatrix::from_dense(&a).unwrap(), b).unwrap();
    BlockSymmetric { qp, x0, r }
}

/// A random point on the segment from the strictly feasible `x0` along a
/// random direction, kept inside the feasible set.
pub fn feasible_point(rng: &mut ChaCha8Rng, qp: &QpInstance, x0: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = (0..qp.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let ad = qp.a().mul_vec(&d).unwrap();
    let ax0 = qp.a().mul_vec(x0).unwrap();
    let mut t_max = 5.0f64;
    for i in 0..qp.m() {
        if ad[i] > 0.0 {
            t_max = t_max.min((qp.b()[i] - ax0[i]) / ad[i]);
        }
    }
    let t = 0.99 * rng.random::<f64>() * t_max;
    x0.iter().zip(&d).map(|(x, di)| x + t * di).collect()
}

/// A random signed permutation of `k` coordinates, as (permutation, signs).
pub fn signed_permutation(rng: &mut ChaCha8Rng, k: usize) -> (Vec<usize>, Vec<f64>) {
    let mut perm: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let signs = (0..k).map(|_| if rng.random_bool(0.5) { -1.0 } else { 1.0 }).collect();
    (perm, signs)
}

/// Rows of the orbits of a few random integer vectors under the cyclic group
/// generated by a signed permutation, skipping orbits that would exceed
/// `max_rows` rows. `BBᵀ` then commutes with the induced
/// row permutation.
pub fn orbit_points(rng: &mut ChaCha8Rng, k: usize, seeds: usize, max_rows: usize) -> DMatrix<f64> {
    let (perm, signs) = signed_permutation(rng, k);
    let apply = |v: &[f64]| -> Vec<f64> { (0..k).map(|i| signs[i] * v[perm[i]]).collect() };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for _ in 0..seeds {
        let v0: Vec<f64> = (0..k).map(|_| rng.random_range(-3..=3) as f64).collect();
        let mut orbit = vec![v0.clone()];
        let mut v = apply(&v0);
        while v != v0 {
            orbit.push(v.clone());
            v = apply(&v);
        }
        if rows.len() + orbit.len() <= max_rows {
            rows.extend(orbit);
        }
    }
    if rows.is_empty() {
        return orbit_points(rng, k, seeds, max_rows);
    }
    DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j])
}

pub fn gram(points: &DMatrix<f64>) -> SparseMatrix {
    SparseMatrix::from_dense(&(points * points.transpose())).unwrap()
}
