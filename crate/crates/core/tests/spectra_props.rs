mod common;

use common::*;
use ndarray::Array2;
use proptest::prelude::*;
use spectral_te::spectra::{dot_values, eig_dot_padded};
use spectral_te::oracle::for_each_permutation;
use spectral_te::{eig_dot, eig_sorted, indicator, threshold_grid, OutcomeMatrix, Pairing};

#[test]
fn eigenvalues_match_independent_solver() {
    let mut r = rng(1);
    for n in [1, 2, 3, 6, 6, 6, 10, 25] {
        let y = sym(n, &mut r);
        let s = eig_sorted(y.entries()).unwrap();
        let want = reference_eigenvalues(y.entries());
        for (got, w) in s.values.iter().zip(&want) {
            assert!((got * n as f64 - w).abs() < 1e-9, "n = {n}");
        }
    }
}

#[test]
fn reconstruction_and_orthonormality() {
    let mut r = rng(2);
    for k in 0..1000 {
        let n = 1 + k % 9;
        let y = sym(n, &mut r);
        let s = eig_sorted(y.entries()).unwrap();
        let gram = s.vectors.t().dot(&s.vectors);
        assert!(max_abs_diff(&gram, &Array2::eye(n)) < 1e-10);
        let rec = s.reconstruct();
        let fro = (&rec - y.entries()).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(fro < 1e-8);
        let energy = y.entries().iter().map(|x| x * x).sum::<f64>() / (n * n) as f64;
        assert!((s.mass() - energy).abs() < 1e-10);
        assert!(s.values.as_slice().unwrap().windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn binary_idempotence() {
    let mut r = rng(3);
    for _ in 0..200 {
        let y = sym(6, &mut r);
        let a = indicator(&y, 0.1).unwrap();
        let s = a.spectrum().unwrap();
        assert!((s.mass() - a.count() / 36.0).abs() < 1e-10);
        assert!((a.mean() - y.entries().iter().filter(|&&v| v <= 0.1).count() as f64 / 36.0).abs() < 1e-15);
    }
}

#[test]
fn relabeling_all_permutations_small() {
    let mut r = rng(4);
    for n in 1..=4 {
        let y = sym(n, &mut r);
        let base = eig_sorted(y.entries()).unwrap().values;
        for_each_permutation(n, |p| {
            let v = eig_sorted(y.permuted(p).entries()).unwrap().values;
            for (a, b) in v.iter().zip(base.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        });
    }
    for _ in 0..50 {
        let y = sym(12, &mut r);
        let p = perm(12, &mut r);
        let a = eig_sorted(y.entries()).unwrap().values;
        let b = eig_sorted(y.permuted(&p).entries()).unwrap().values;
        assert!(a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() < 1e-12));
    }
}

#[test]
fn rearrangement_bounds_every_pairing() {
    let mut r = rng(5);
    for n in 1..=6 {
        let a = eig_sorted(sym(n, &mut r).entries()).unwrap();
        let b = eig_sorted(sym(n, &mut r).entries()).unwrap();
        let hi = eig_dot(&a, &b, Pairing::Sorted).unwrap();
        let lo = eig_dot(&a, &b, Pairing::Antisorted).unwrap();
        for_each_permutation(n, |p| {
            let v: f64 = (0..n).map(|k| a.values[k] * b.values[p[k]]).sum();
            assert!(lo <= v + 1e-12 && v <= hi + 1e-12);
        });
    }
}

#[test]
fn padded_products_unequal_sizes() {
    let a = [0.6, 0.1, -0.3];
    let b = [0.5, -0.4];
    // b padded to [0.5, 0, -0.4]
    assert!((eig_dot_padded(&a, &b, Pairing::Sorted) - (0.3f64 + 0.12)).abs() < 1e-15);
    assert!((eig_dot_padded(&a, &b, Pairing::Antisorted) - (-0.24f64 - 0.15)).abs() < 1e-15);
    assert!(dot_values(&a, &b, Pairing::Sorted).is_err());
}

#[test]
fn grid_size_bound() {
    let mut r = rng(6);
    for _ in 0..20 {
        let a = sym(4, &mut r);
        let b = sym(3, &mut r);
        let g = threshold_grid(&a, &b);
        assert!(g.len() <= 16 + 9 + 2);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn single_precision_path() {
    let a = Array2::from_shape_fn((5, 5), |(i, j)| ((i * 7 + j * 7) % 5) as f32 * 0.25);
    let y = OutcomeMatrix::<f32>::new(a).unwrap();
    let s = eig_sorted(y.entries()).unwrap();
    let rec = s.reconstruct();
    assert!((&rec - y.entries()).iter().all(|x| x.abs() < 1e-4));
}

proptest! {
    #[test]
    fn sorted_dominates_antisorted(xs in prop::collection::vec(-1.0f64..1.0, 15)) {
        let n = 5;
        let mut a = Array2::zeros((n, n));
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                a[[i, j]] = xs[k];
                a[[j, i]] = xs[k];
                k += 1;
            }
        }
        let s = eig_sorted(&a).unwrap();
        let t = eig_sorted(&a.mapv(|v| v * v - 0.3)).unwrap();
        prop_assert!(eig_dot(&s, &t, Pairing::Sorted).unwrap() >= eig_dot(&s, &t, Pairing::Antisorted).unwrap() - 1e-12);
    }
}
