//! Symmetric eigendecomposition with normalized, signed-descending spectra,
//! indicator thresholding and eigenvalue inner products.

mod eigen;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use eigen::symmetric_eigen;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Treatment arm label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    Untreated = 0,
    Treated = 1,
}

/// Square symmetric matrix of finite pairwise outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeMatrix<T: Scalar> {
    entries: Array2<T>,
    arm: Option<Arm>,
}

impl<T: Scalar> OutcomeMatrix<T> {
    /// Validates and symmetrizes (by averaging) within the default relative tolerance.
    pub fn new(entries: Array2<T>) -> Result<Self> {
        Self::with_tolerance(entries, T::symmetry_tol())
    }

    /// Like [`OutcomeMatrix::new`] with a caller-supplied relative symmetry tolerance.
    pub fn with_tolerance(mut entries: Array2<T>, tol: T) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(Error::NotSquare { rows: r, cols: c });
        }
        if r == 0 {
            return Err(Error::Empty("matrix"));
        }
        check_finite(&entries)?;
        let scale = entries.iter().fold(T::one(), |m, x| m.max(x.abs()));
        let (mut worst, mut at) = (T::zero(), (0, 0));
        for i in 0..r {
            for j in (i + 1)..r {
                let d = (entries[[i, j]] - entries[[j, i]]).abs();
                if d > worst {
                    worst = d;
                    at = (i, j);
                }
            }
        }
        if worst > tol * scale {
            return Err(Error::NotSymmetric {
                max_asymmetry: worst.to_f64_lossy(),
                row: at.0,
                col: at.1,
            });
        }
        let half = T::lit(0.5);
        for i in 0..r {
            for j in (i + 1)..r {
                let m = (entries[[i, j]] + entries[[j, i]]) * half;
                entries[[i, j]] = m;
                entries[[j, i]] = m;
            }
        }
        Ok(Self { entries, arm: None })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::new(rows_to_array(rows)?)
    }

    pub fn with_arm(mut self, arm: Arm) -> Self {
        self.arm = Some(arm);
        self
    }

    pub fn arm(&self) -> Option<Arm> {
        self.arm
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<T> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<T> {
        self.entries
    }

    pub fn mean(&self) -> T {
        self.entries.iter().copied().sum::<T>() / T::count(self.entries.len())
    }

    /// Relabels agents: `out[i][j] = self[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        assert_eq!(perm.len(), n, "permutation length");
        Self {
            entries: Array2::from_shape_fn((n, n), |(i, j)| self.entries[[perm[i], perm[j]]]),
            arm: self.arm,
        }
    }

    /// Induced principal submatrix on the given agents.
    pub fn principal(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        Self {
            entries: Array2::from_shape_fn((k, k), |(i, j)| self.entries[[idx[i], idx[j]]]),
            arm: self.arm,
        }
    }
}

pub(crate) fn check_finite<T: Scalar>(a: &Array2<T>) -> Result<()> {
    for ((i, j), x) in a.indexed_iter() {
        if !x.is_finite() {
            return Err(Error::NonFinite { row: i, col: j });
        }
    }
    Ok(())
}

pub(crate) fn rows_to_array<T: Scalar>(rows: &[Vec<T>]) -> Result<Array2<T>> {
    let r = rows.len();
    if r == 0 {
        return Err(Error::Empty("matrix"));
    }
    let c = rows[0].len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != c {
            return Err(Error::Dimension(format!(
                "row {i} has {} entries, expected {c}",
                row.len()
            )));
        }
    }
    Ok(Array2::from_shape_fn((r, c), |(i, j)| rows[i][j]))
}

/// Normalized eigenvalues (matrix eigenvalues divided by `scale`) sorted
/// signed-descending, with orthonormal eigenvector columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T: Scalar> {
    pub values: Array1<T>,
    pub vectors: Array2<T>,
    pub scale: usize,
}

impl<T: Scalar> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Σ λ².
    pub fn mass(&self) -> T {
        self.values.iter().map(|&x| x * x).sum()
    }

    /// Smallest gap between consecutive sorted eigenvalues (normalized scale).
    pub fn min_gap(&self) -> Option<T> {
        self.values
            .as_slice()
            .unwrap()
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(None, |m: Option<T>, g| Some(m.map_or(g, |m| m.min(g))))
    }

    /// Σ_r (n λ_r) φ_r φ_r'.
    pub fn reconstruct(&self) -> Array2<T> {
        let n = self.vectors.nrows();
        let s = T::count(self.scale);
        let mut out = Array2::zeros((n, n));
        for (r, &l) in self.values.iter().enumerate() {
            let col = self.vectors.column(r);
            let w = l * s;
            for i in 0..n {
                let wi = w * col[i];
                for j in 0..n {
                    out[[i, j]] += wi * col[j];
                }
            }
        }
        out
    }
}

/// Full eigendecomposition of a symmetric matrix under the normalization and
/// ordering conventions: eigenvalues divided by n, signed-descending with ties
/// in solver order, each eigenvector's first nonzero coordinate positive.
pub fn eig_sorted<T: Scalar>(m: &Array2<T>) -> Result<Spectrum<T>> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::NotSquare { rows: r, cols: c });
    }
    check_finite(m)?;
    let scale = m.iter().fold(T::one(), |a, x| a.max(x.abs()));
    for i in 0..r {
        for j in (i + 1)..r {
            let d = (m[[i, j]] - m[[j, i]]).abs();
            if d > T::symmetry_tol() * scale {
                return Err(Error::NotSymmetric {
                    max_asymmetry: d.to_f64_lossy(),
                    row: i,
                    col: j,
                });
            }
        }
    }
    let (d, v) = symmetric_eigen(m)?;
    let n = r;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap());
    let nn = T::count(n);
    let values = Array1::from_iter(order.iter().map(|&k| d[k] / nn));
    let mut vectors = Array2::zeros((n, n));
    let tiny = T::epsilon() * T::lit(100.0);
    for (dst, &src) in order.iter().enumerate() {
        let col = v.column(src);
        let flip = col
            .iter()
            .find(|x| x.abs() > tiny)
            .is_some_and(|&x| x < T::zero());
        for i in 0..n {
            vectors[[i, dst]] = if flip { -col[i] } else { col[i] };
        }
    }
    Ok(Spectrum {
        values,
        vectors,
        scale: n,
    })
}

/// Spectrum of an outcome matrix.
pub fn spectrum<T: Scalar>(y: &OutcomeMatrix<T>) -> Result<Spectrum<T>> {
    eig_sorted(y.entries())
}

/// Entrywise weak-inequality threshold `1{Y <= y}`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorMatrix<T: Scalar> {
    pub threshold: T,
    pub entries: Array2<T>,
}

impl<T: Scalar> IndicatorMatrix<T> {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Empirical CDF at the threshold.
    pub fn mean(&self) -> T {
        self.count() / T::count(self.entries.len())
    }

    pub fn count(&self) -> T {
        self.entries.iter().copied().sum()
    }

    pub fn spectrum(&self) -> Result<Spectrum<T>> {
        eig_sorted(&self.entries)
    }

    /// Builds an indicator directly from a 0/1 matrix.
    pub fn from_binary(entries: Array2<T>) -> Result<Self> {
        let m = OutcomeMatrix::new(entries)?;
        if m.entries().iter().any(|&x| x != T::zero() && x != T::one()) {
            return Err(Error::InvalidArgument("indicator entries must be 0 or 1".into()));
        }
        Ok(Self {
            threshold: T::lit(0.5),
            entries: m.into_entries(),
        })
    }
}

pub fn indicator<T: Scalar>(y: &OutcomeMatrix<T>, threshold: T) -> Result<IndicatorMatrix<T>> {
    if !threshold.is_finite() {
        return Err(Error::InvalidArgument("threshold must be finite".into()));
    }
    Ok(IndicatorMatrix {
        threshold,
        entries: y
            .entries()
            .mapv(|v| if v <= threshold { T::one() } else { T::zero() }),
    })
}

/// Pairing of two sorted spectra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pairing {
    Sorted,
    Antisorted,
}

/// Σ_r λ_(r)a λ_(r)b under the requested pairing; both lists signed-descending.
pub fn eig_dot<T: Scalar>(a: &Spectrum<T>, b: &Spectrum<T>, pairing: Pairing) -> Result<T> {
    dot_values(a.values.as_slice().unwrap(), b.values.as_slice().unwrap(), pairing)
}

/// [`eig_dot`] on raw signed-descending value lists.
pub fn dot_values<T: Scalar>(a: &[T], b: &[T], pairing: Pairing) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "spectra lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    Ok(match pairing {
        Pairing::Sorted => a.iter().zip(b).map(|(&x, &y)| x * y).sum(),
        Pairing::Antisorted => (0..n).map(|r| a[r] * b[n - 1 - r]).sum(),
    })
}

/// Pads a signed-descending list with zeros to `len`, inserting them between
/// the positive and negative values so the result stays sorted.
pub fn pad_sorted<T: Scalar>(values: &[T], len: usize) -> Vec<T> {
    if values.len() >= len {
        return values.to_vec();
    }
    let split = values.iter().take_while(|&&x| x > T::zero()).count();
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(&values[..split]);
    out.extend(std::iter::repeat_n(T::zero(), len - values.len()));
    out.extend_from_slice(&values[split..]);
    out
}

/// [`eig_dot`] after zero-padding both spectra to a common length.
pub fn eig_dot_padded<T: Scalar>(a: &[T], b: &[T], pairing: Pairing) -> T {
    let len = a.len().max(b.len());
    dot_values(&pad_sorted(a, len), &pad_sorted(b, len), pairing).expect("equal lengths")
}

/// Sorted distinct entry values of both matrices plus one sentinel below the
/// minimum and one above the maximum.
pub fn threshold_grid<T: Scalar>(y1: &OutcomeMatrix<T>, y0: &OutcomeMatrix<T>) -> Vec<T> {
    let mut vals: Vec<T> = y1
        .entries()
        .iter()
        .chain(y0.entries().iter())
        .copied()
        .collect();
    with_sentinels(distinct_sorted(&mut vals))
}

pub(crate) fn distinct_sorted<T: Scalar>(vals: &mut Vec<T>) -> Vec<T> {
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals.dedup();
    std::mem::take(vals)
}

pub(crate) fn with_sentinels<T: Scalar>(vals: Vec<T>) -> Vec<T> {
    if vals.is_empty() {
        return vals;
    }
    let lo = vals[0];
    let hi = *vals.last().unwrap();
    let span = (hi - lo).max(T::one());
    let mut out = Vec::with_capacity(vals.len() + 2);
    out.push(lo - span);
    out.extend(vals);
    out.push(hi + span);
    out
}

/// Indicator spectra of `y` at each threshold, computed in parallel and
/// returned in threshold order.
pub fn indicator_spectra<T: Scalar>(y: &OutcomeMatrix<T>, grid: &[T]) -> Result<Vec<Vec<T>>> {
    grid.par_iter()
        .map(|&t| Ok(indicator(y, t)?.spectrum()?.values.to_vec()))
        .collect()
}
