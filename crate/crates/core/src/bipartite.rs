//! Two-population outcome matrices: symmetrization and mapping bounds back to
//! the rectangular scale.

use ndarray::{s, Array2};

use crate::bounds::{dpo_bounds, IntervalBound};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectra::{check_finite, rows_to_array, OutcomeMatrix};

/// Rectangular matrix of finite outcomes between row agents and column agents.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteMatrix<T: Scalar> {
    entries: Array2<T>,
}

impl<T: Scalar> BipartiteMatrix<T> {
    pub fn new(entries: Array2<T>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty("matrix"));
        }
        check_finite(&entries)?;
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::new(rows_to_array(rows)?)
    }

    pub fn entries(&self) -> &Array2<T> {
        &self.entries
    }

    pub fn n_rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.dim()
    }

    /// Submatrix on the selected rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Result<Self> {
        Self::new(Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| {
            self.entries[[rows[i], cols[j]]]
        }))
    }
}

/// Block matrix `[[0, B], [B', 0]]`.
pub fn symmetrize<T: Scalar>(b: &BipartiteMatrix<T>) -> OutcomeMatrix<T> {
    let (r, c) = b.shape();
    let mut m = Array2::zeros((r + c, r + c));
    m.slice_mut(s![..r, r..]).assign(b.entries());
    m.slice_mut(s![r.., ..r]).assign(&b.entries().t());
    OutcomeMatrix::new(m).expect("block matrix is symmetric and finite")
}

/// Maps a bound on the symmetrized DPO back to the rectangular DPO by
/// removing the deterministic contribution of the zero diagonal blocks.
pub fn bipartite_cell_unmap<T: Scalar>(
    f_dagger: &IntervalBound<T>,
    y1: T,
    y0: T,
    n_rows: usize,
    n_cols: usize,
) -> IntervalBound<T> {
    let total = T::count(n_rows + n_cols);
    let diag = T::count(n_rows * n_rows + n_cols * n_cols);
    let zeros_in = if T::zero() <= y1 && T::zero() <= y0 {
        T::one()
    } else {
        T::zero()
    };
    let denom = T::lit(2.0) * T::count(n_rows * n_cols);
    let map = |f: T| (f * total * total - diag * zeros_in) / denom;
    IntervalBound::clip(
        map(f_dagger.lower),
        map(f_dagger.upper),
        f_dagger.binding_lower,
        f_dagger.binding_upper,
    )
}

/// Symmetrize both arms, bound the symmetrized DPO, and map back.
pub fn bipartite_dpo_bounds<T: Scalar>(
    b1: &BipartiteMatrix<T>,
    b0: &BipartiteMatrix<T>,
    y1: T,
    y0: T,
) -> Result<IntervalBound<T>> {
    if b1.shape() != b0.shape() {
        return Err(Error::Dimension(format!(
            "bipartite arms must have equal shapes: {:?} vs {:?}",
            b1.shape(),
            b0.shape()
        )));
    }
    let f = dpo_bounds(&symmetrize(b1), &symmetrize(b0), y1, y0)?;
    Ok(bipartite_cell_unmap(&f, y1, y0, b1.n_rows(), b1.n_cols()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::spectrum;
    use ndarray::array;

    #[test]
    fn one_by_one() {
        let b = BipartiteMatrix::new(array![[1.0]]).unwrap();
        assert_eq!(symmetrize(&b).entries(), &array![[0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn identity_singular_values() {
        let b = BipartiteMatrix::new(Array2::<f64>::eye(2)).unwrap();
        let s = spectrum(&symmetrize(&b)).unwrap();
        let want = [0.25, 0.25, -0.25, -0.25];
        for (x, w) in s.values.iter().zip(want) {
            assert!((x - w).abs() < 1e-14);
        }
    }

    #[test]
    fn unmap_examples() {
        let f = IntervalBound::clip(1.0, 1.0, None, None);
        let u = bipartite_cell_unmap(&f, 0.5, 0.5, 1, 1);
        assert_eq!((u.lower, u.upper), (1.0, 1.0));
        let f = IntervalBound::clip(0.25, 0.5, None, None);
        let u = bipartite_cell_unmap(&f, -0.5, -0.5, 1, 1);
        assert_eq!((u.lower, u.upper), (0.5, 1.0));
    }

    #[test]
    fn shapes_must_match() {
        let a = BipartiteMatrix::new(Array2::<f64>::zeros((2, 3))).unwrap();
        let b = BipartiteMatrix::new(Array2::<f64>::zeros((3, 2))).unwrap();
        assert!(bipartite_dpo_bounds(&a, &b, 0.0, 0.0).is_err());
    }
}
