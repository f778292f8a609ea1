#![allow(dead_code)]

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_te::{BipartiteMatrix, OutcomeMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sym(n: usize, r: &mut ChaCha8Rng) -> OutcomeMatrix<f64> {
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v: f64 = r.gen_range(-1.0..1.0);
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
    OutcomeMatrix::new(a).unwrap()
}

pub fn binary(n: usize, p: f64, r: &mut ChaCha8Rng) -> OutcomeMatrix<f64> {
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = if r.gen_bool(p) { 1.0 } else { 0.0 };
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
    OutcomeMatrix::new(a).unwrap()
}

/// Symmetric matrix with entries on a small integer lattice (ties likely).
pub fn lattice(n: usize, levels: i32, r: &mut ChaCha8Rng) -> OutcomeMatrix<f64> {
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = r.gen_range(0..levels) as f64;
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
    OutcomeMatrix::new(a).unwrap()
}

pub fn binary_rect(rows: usize, cols: usize, p: f64, r: &mut ChaCha8Rng) -> BipartiteMatrix<f64> {
    BipartiteMatrix::new(Array2::from_shape_fn((rows, cols), |_| {
        if r.gen_bool(p) {
            1.0
        } else {
            0.0
        }
    }))
    .unwrap()
}

pub fn perm(n: usize, r: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(r);
    p
}

pub fn to_nalgebra(a: &Array2<f64>) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Eigenvalues from an independent solver, descending.
pub fn reference_eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = to_nalgebra(a).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|x, y| y.partial_cmp(x).unwrap());
    v
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    (a - b).iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
