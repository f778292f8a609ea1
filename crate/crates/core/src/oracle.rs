//! Exhaustive permutation oracles for sharp finite-population bounds.

use ndarray::Array2;

use crate::bipartite::BipartiteMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectra::{IndicatorMatrix, OutcomeMatrix};

/// Largest size enumerated over all relative permutations.
pub const MAX_N: usize = 8;
/// Largest row or column count for the bipartite oracle.
pub const MAX_BIPARTITE: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct SharpInterval<T: Scalar> {
    pub min: T,
    pub max: T,
    pub argmin_perm: Vec<usize>,
    pub argmax_perm: Vec<usize>,
}

/// Calls `f` on every permutation of `0..n` (Heap's algorithm).
pub fn for_each_permutation<F: FnMut(&[usize])>(n: usize, mut f: F) {
    let mut p: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&p);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            f(&p);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Min and max over relabelings `π` of the fraction of pairs `(i, j)` with
/// `event(Y1[π(i)][π(j)], Y0[i][j])`.
pub fn brute_joint_sharp<T, E>(y1: &Array2<T>, y0: &Array2<T>, event: E) -> Result<SharpInterval<T>>
where
    T: Scalar,
    E: Fn(T, T) -> bool,
{
    let n = y1.nrows();
    if y0.nrows() != n {
        return Err(Error::Dimension(format!(
            "arms must have equal size: {n} vs {}",
            y0.nrows()
        )));
    }
    if n > MAX_N {
        return Err(Error::TooLarge { n, limit: MAX_N });
    }
    let mut best: Option<(usize, Vec<usize>, usize, Vec<usize>)> = None;
    for_each_permutation(n, |p| {
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                if event(y1[[p[i], p[j]]], y0[[i, j]]) {
                    count += 1;
                }
            }
        }
        match &mut best {
            None => best = Some((count, p.to_vec(), count, p.to_vec())),
            Some((lo, lp, hi, hp)) => {
                if count < *lo {
                    *lo = count;
                    *lp = p.to_vec();
                }
                if count > *hi {
                    *hi = count;
                    *hp = p.to_vec();
                }
            }
        }
    });
    let (lo, lp, hi, hp) = best.expect("at least one permutation");
    let cells = T::count(n * n);
    Ok(SharpInterval {
        min: T::count(lo) / cells,
        max: T::count(hi) / cells,
        argmin_perm: lp,
        argmax_perm: hp,
    })
}

/// Sharp interval for the overlap `(1/n²) Σ A1[π(i)][π(j)] A0[i][j]`.
pub fn qap_sharp_dpo<T: Scalar>(
    a1: &IndicatorMatrix<T>,
    a0: &IndicatorMatrix<T>,
) -> Result<SharpInterval<T>> {
    brute_joint_sharp(&a1.entries, &a0.entries, |x, y| x == T::one() && y == T::one())
}

/// Sharp interval for the fraction of pairs with `Y1 - Y0 <= y`.
pub fn brute_dte_sharp<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    y: T,
) -> Result<SharpInterval<T>> {
    brute_joint_sharp(y1.entries(), y0.entries(), |a, b| a - b <= y)
}

/// Sharp overlap interval under independent row and column relabelings.
/// The returned permutations list the row permutation followed by the
/// column permutation.
pub fn bipartite_sharp_dpo<T: Scalar>(
    a1: &BipartiteMatrix<T>,
    a0: &BipartiteMatrix<T>,
) -> Result<SharpInterval<T>> {
    let (r, c) = a1.shape();
    if a0.shape() != (r, c) {
        return Err(Error::Dimension(format!(
            "shapes differ: {:?} vs {:?}",
            a1.shape(),
            a0.shape()
        )));
    }
    if r.max(c) > MAX_BIPARTITE {
        return Err(Error::TooLarge {
            n: r.max(c),
            limit: MAX_BIPARTITE,
        });
    }
    let (e1, e0) = (a1.entries(), a0.entries());
    let mut rows = Vec::new();
    for_each_permutation(r, |p| rows.push(p.to_vec()));
    let mut best: Option<(usize, Vec<usize>, usize, Vec<usize>)> = None;
    for rp in &rows {
        for_each_permutation(c, |cp| {
            let mut count = 0usize;
            for i in 0..r {
                for j in 0..c {
                    if e1[[rp[i], cp[j]]] == T::one() && e0[[i, j]] == T::one() {
                        count += 1;
                    }
                }
            }
            let tag = || rp.iter().chain(cp.iter()).copied().collect::<Vec<_>>();
            match &mut best {
                None => best = Some((count, tag(), count, tag())),
                Some((lo, lp, hi, hp)) => {
                    if count < *lo {
                        *lo = count;
                        *lp = tag();
                    }
                    if count > *hi {
                        *hi = count;
                        *hp = tag();
                    }
                }
            }
        });
    }
    let (lo, lp, hi, hp) = best.expect("at least one permutation");
    let cells = T::count(r * c);
    Ok(SharpInterval {
        min: T::count(lo) / cells,
        max: T::count(hi) / cells,
        argmin_perm: lp,
        argmax_perm: hp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::collections::HashSet;

    #[test]
    fn heap_visits_all() {
        let mut seen = HashSet::new();
        for_each_permutation(5, |p| {
            seen.insert(p.to_vec());
        });
        assert_eq!(seen.len(), 120);
        let mut count = 0;
        for_each_permutation(0, |_| count += 1);
        assert_eq!(count, 1);
    }

    #[test]
    fn exchange_pair() {
        let a = IndicatorMatrix::from_binary(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let s = qap_sharp_dpo(&a, &a).unwrap();
        assert_eq!((s.min, s.max), (0.5, 0.5));
    }

    #[test]
    fn all_ones_and_zeros() {
        let ones = IndicatorMatrix::from_binary(Array2::<f64>::ones((3, 3))).unwrap();
        let a0 = IndicatorMatrix::from_binary(array![[1.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 1.0]]).unwrap();
        let s = qap_sharp_dpo(&ones, &a0).unwrap();
        assert_eq!((s.min, s.max), (4.0 / 9.0, 4.0 / 9.0));
        let zeros = IndicatorMatrix::from_binary(Array2::<f64>::zeros((3, 3))).unwrap();
        let s = qap_sharp_dpo(&a0, &zeros).unwrap();
        assert_eq!((s.min, s.max), (0.0, 0.0));
    }

    #[test]
    fn relative_permutation_suffices() {
        // two independent relabelings give the same extremes as one relative relabeling
        let a1 = array![[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 1.0, 0.0]];
        let a0 = array![[0.0, 1.0, 1.0], [1.0, 0.0, 0.0], [1.0, 0.0, 1.0]];
        let mut perms = Vec::new();
        for_each_permutation(3, |p| perms.push(p.to_vec()));
        let (mut lo, mut hi) = (usize::MAX, 0);
        for p1 in &perms {
            for p0 in &perms {
                let mut c = 0;
                for i in 0..3 {
                    for j in 0..3 {
                        if a1[[p1[i], p1[j]]] == 1.0 && a0[[p0[i], p0[j]]] == 1.0 {
                            c += 1;
                        }
                    }
                }
                lo = lo.min(c);
                hi = hi.max(c);
            }
        }
        let i1 = IndicatorMatrix::from_binary(a1).unwrap();
        let i0 = IndicatorMatrix::from_binary(a0).unwrap();
        let s = qap_sharp_dpo(&i1, &i0).unwrap();
        assert_eq!(s.min, lo as f64 / 9.0);
        assert_eq!(s.max, hi as f64 / 9.0);
    }

    #[test]
    fn dte_trivial_cases() {
        let y = OutcomeMatrix::from_rows(&[vec![0.1, 0.5], vec![0.5, 0.9]]).unwrap();
        assert_eq!(brute_dte_sharp(&y, &y, 0.0).unwrap().max, 1.0);
        let s = brute_dte_sharp(&y, &y, -1.0).unwrap();
        assert_eq!((s.min, s.max), (0.0, 0.0));
    }

    #[test]
    fn guards() {
        let y = OutcomeMatrix::new(Array2::<f64>::zeros((9, 9))).unwrap();
        assert!(matches!(brute_dte_sharp(&y, &y, 0.0), Err(Error::TooLarge { .. })));
        let b = BipartiteMatrix::new(Array2::<f64>::zeros((6, 1))).unwrap();
        assert!(bipartite_sharp_dpo(&b, &b).is_err());
    }

    #[test]
    fn bipartite_trivial() {
        let one = BipartiteMatrix::new(array![[1.0]]).unwrap();
        let s = bipartite_sharp_dpo(&one, &one).unwrap();
        assert_eq!((s.min, s.max), (1.0, 1.0));
        let ones = BipartiteMatrix::new(Array2::<f64>::ones((2, 3))).unwrap();
        let b = BipartiteMatrix::new(array![[1.0, 0.0, 1.0], [0.0, 0.0, 1.0]]).unwrap();
        let s = bipartite_sharp_dpo(&ones, &b).unwrap();
        assert_eq!((s.min, s.max), (0.5, 0.5));
    }
}
