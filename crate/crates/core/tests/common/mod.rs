//! Shared helpers for the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqsolve_core::MatrixSq;
use std::sync::Arc;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_dense(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    DMatrix::from_fn(rows, cols, |_, _| r.random::<f64>() * 2.0 - 1.0)
}

pub fn random_vec(len: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..len).map(|_| r.random::<f64>() * 2.0 - 1.0).collect()
}

pub fn matrix_sq(a: &DMatrix<f64>) -> Arc<MatrixSq> {
    Arc::new(MatrixSq::from_dense(a).unwrap())
}

/// Random matrix with prescribed singular values, A = U diag(sigma) V^T with
/// seeded orthogonal factors.
pub fn prescribed_matrix(rows: usize, cols: usize, sigmas: &[f64], seed: u64) -> DMatrix<f64> {
    let r = sigmas.len().min(rows).min(cols);
    let gu = random_dense(rows, r, seed.wrapping_mul(2).wrapping_add(1));
    let gv = random_dense(cols, r, seed.wrapping_mul(2).wrapping_add(2));
    let u = gu.qr().q();
    let v = gv.qr().q();
    let mut s = DMatrix::zeros(r, r);
    for i in 0..r {
        s[(i, i)] = sigmas[i];
    }
    u * s * v.transpose()
}

/// Evenly spaced singular values in [1/kappa, 1], largest first.
pub fn linear_profile(count: usize, kappa: f64) -> Vec<f64> {
    if count == 1 {
        return vec![1.0];
    }
    (0..count)
        .map(|i| 1.0 - (1.0 - 1.0 / kappa) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Consistent right-hand side b = A x_planted for a seeded planted solution.
pub fn consistent_rhs(a: &DMatrix<f64>, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let x = random_vec(a.ncols(), seed);
    let b = a * nalgebra::DVector::from_column_slice(&x);
    (x, b.iter().copied().collect())
}

/// Empirical distribution of `draws` samples from `f` over `n` outcomes.
pub fn empirical<R: Rng, F: FnMut(&mut R) -> usize>(
    n: usize,
    draws: usize,
    r: &mut R,
    mut f: F,
) -> Vec<f64> {
    let mut counts = vec![0u64; n];
    for _ in 0..draws {
        counts[f(r)] += 1;
    }
    counts.iter().map(|&c| c as f64 / draws as f64).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn relative_error(x: &[f64], x_star: &[f64]) -> f64 {
    norm(&sub(x, x_star)) / norm(x_star)
}
