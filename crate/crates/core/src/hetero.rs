//! Row/column heterogeneity: additive decomposition into row effects and a
//! doubly centered residual, adjusted DPO/DTE bounds and the hetero STE.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::bounds::{dte_candidates, dte_from_dpo, matrix_grid, BoundOptions, IntervalBound};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectra::{eig_dot_padded, eig_sorted, indicator, OutcomeMatrix, Pairing};
use crate::ste::{BasisTag, SteMatrix};

/// `M[i][j] = alpha[i] + alpha[j] + epsilon[i][j]` with `epsilon` doubly centered.
#[derive(Clone, Debug, PartialEq)]
pub struct AdditiveDecomposition<T: Scalar> {
    pub alpha: Vec<T>,
    pub epsilon: Array2<T>,
    pub alpha_bar: T,
}

pub fn decompose_additive<T: Scalar>(m: &Array2<T>) -> Result<AdditiveDecomposition<T>> {
    let m = OutcomeMatrix::new(m.clone())?;
    let e = m.entries();
    let n = m.n();
    let nn = T::count(n);
    let row_means: Vec<T> = (0..n).map(|i| e.row(i).iter().copied().sum::<T>() / nn).collect();
    let grand = row_means.iter().copied().sum::<T>() / nn;
    let half = grand * T::lit(0.5);
    let alpha: Vec<T> = row_means.iter().map(|&r| r - half).collect();
    let epsilon = Array2::from_shape_fn((n, n), |(i, j)| e[[i, j]] - alpha[i] - alpha[j]);
    Ok(AdditiveDecomposition {
        alpha,
        epsilon,
        alpha_bar: half,
    })
}

/// Which branch set bounds the residual cross term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeteroMode {
    /// Rearrangement branches only; valid for real-valued residuals.
    #[default]
    #[serde(rename = "conservative")]
    Conservative,
    /// Adds the mass branches, which presume 0/1 entries.
    #[serde(rename = "paperExact")]
    PaperExact,
}

impl std::str::FromStr for HeteroMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conservative" => Ok(Self::Conservative),
            "paperExact" => Ok(Self::PaperExact),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s}"))),
        }
    }
}

/// `∫ q_a(u) q_b(u) du` for the step quantile functions of two samples;
/// `a` descending, `b` descending (comonotone) or ascending (antitone).
fn quantile_product<T: Scalar>(a: &[T], b: &[T]) -> T {
    let (na, nb) = (a.len(), b.len());
    let mut total = T::zero();
    let (mut i, mut j) = (0usize, 0usize);
    // breakpoints k/na and l/nb, merged by cross-multiplication
    let mut prev = (0usize, 1usize);
    while i < na && j < nb {
        let next_a = (i + 1) * nb;
        let next_b = (j + 1) * na;
        let end = next_a.min(next_b);
        let width = T::count(end) / T::count(na * nb) - T::count(prev.0) / T::count(prev.1);
        total += a[i] * b[j] * width;
        prev = (end, na * nb);
        if next_a == end {
            i += 1;
        }
        if next_b == end {
            j += 1;
        }
    }
    total
}

struct HeteroParts<T: Scalar> {
    mass: T,
    alpha_desc: Vec<T>,
    alpha_bar: T,
    eps_values: Vec<T>,
    eps_mass: T,
}

fn hetero_parts<T: Scalar>(
    y: &OutcomeMatrix<T>,
    t: T,
    exclude_diagonal: bool,
) -> Result<HeteroParts<T>> {
    let mut a = indicator(y, t)?;
    if exclude_diagonal {
        for i in 0..a.n() {
            a.entries[[i, i]] = T::zero();
        }
    }
    let d = decompose_additive(&a.entries)?;
    let spec = eig_sorted(&d.epsilon)?;
    let mut alpha_desc = d.alpha.clone();
    alpha_desc.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(HeteroParts {
        mass: a.mean(),
        alpha_desc,
        alpha_bar: d.alpha_bar,
        eps_mass: spec.mass(),
        eps_values: spec.values.to_vec(),
    })
}

fn hetero_from_parts<T: Scalar>(
    p1: &HeteroParts<T>,
    p0: &HeteroParts<T>,
    mode: HeteroMode,
) -> (T, T) {
    let two = T::lit(2.0);
    let base = two * p1.alpha_bar * p0.alpha_bar;
    let up_alpha = two * quantile_product(&p1.alpha_desc, &p0.alpha_desc);
    let asc0: Vec<T> = p0.alpha_desc.iter().rev().copied().collect();
    let lo_alpha = two * quantile_product(&p1.alpha_desc, &asc0);
    let sorted = eig_dot_padded(&p1.eps_values, &p0.eps_values, Pairing::Sorted);
    let anti = eig_dot_padded(&p1.eps_values, &p0.eps_values, Pairing::Antisorted);
    let (l_eps, u_eps) = match mode {
        HeteroMode::Conservative => (anti, sorted),
        HeteroMode::PaperExact => (
            (p1.eps_mass + p0.eps_mass - T::one()).max(anti).max(T::zero()),
            p1.eps_mass.min(p0.eps_mass).min(sorted),
        ),
    };
    (lo_alpha + base + l_eps, up_alpha + base + u_eps)
}

fn exclusion_scale<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    opts: &BoundOptions,
) -> Result<T> {
    if !opts.exclude_diagonal {
        return Ok(T::one());
    }
    if y1.n() != y0.n() || y1.n() < 2 {
        return Err(Error::Dimension(
            "excluding the diagonal requires equal arm sizes of at least two".into(),
        ));
    }
    let n = T::count(y1.n());
    Ok(n / (n - T::one()))
}

/// DPO bounds after removing row/column effects from both indicators.
pub fn dpo_bounds_hetero<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    t1: T,
    t0: T,
    mode: HeteroMode,
) -> Result<IntervalBound<T>> {
    dpo_bounds_hetero_with(y1, y0, t1, t0, mode, &BoundOptions::default())
}

pub fn dpo_bounds_hetero_with<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    t1: T,
    t0: T,
    mode: HeteroMode,
    opts: &BoundOptions,
) -> Result<IntervalBound<T>> {
    let scale = exclusion_scale(y1, y0, opts)?;
    let p1 = hetero_parts(y1, t1, opts.exclude_diagonal)?;
    let p0 = hetero_parts(y0, t0, opts.exclude_diagonal)?;
    let (lo, hi) = hetero_from_parts(&p1, &p0, mode);
    Ok(IntervalBound::clip(lo * scale, hi * scale, None, None))
}

/// DTE bounds with the heterogeneity-adjusted DPO upper bound in the
/// candidate-grid algebra.
pub fn dte_bounds_hetero<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    y: T,
    mode: HeteroMode,
) -> Result<IntervalBound<T>> {
    dte_bounds_hetero_with(y1, y0, y, mode, &BoundOptions::default())
}

pub fn dte_bounds_hetero_with<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    y: T,
    mode: HeteroMode,
    opts: &BoundOptions,
) -> Result<IntervalBound<T>> {
    if !y.is_finite() {
        return Err(Error::InvalidArgument("y must be finite".into()));
    }
    let scale = exclusion_scale(y1, y0, opts)?;
    let cands = dte_candidates(&matrix_grid(y1), &matrix_grid(y0), y);
    dte_from_dpo(&cands, |a, b| {
        let p1 = hetero_parts(y1, a, opts.exclude_diagonal)?;
        let p0 = hetero_parts(y0, b, opts.exclude_diagonal)?;
        let (_, hi) = hetero_from_parts(&p1, &p0, mode);
        let u = (hi * scale).min(T::one()).max(T::zero());
        Ok((p1.mass * scale, p0.mass * scale, u))
    })
}

/// STE with row effects matched by rank in the basis arm and the residuals
/// expanded in the basis arm's residual eigenvectors.
pub fn ste_hetero<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    basis_arm: BasisTag,
) -> Result<SteMatrix<T>> {
    let n = y1.n();
    if y0.n() != n {
        return Err(Error::Dimension(format!(
            "arms must have equal size: {n} vs {}",
            y0.n()
        )));
    }
    let d1 = decompose_additive(y1.entries())?;
    let d0 = decompose_additive(y0.entries())?;
    let (ranked, tag) = match basis_arm {
        BasisTag::Untreated => (&d0, BasisTag::Untreated),
        _ => (&d1, BasisTag::Treated),
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        ranked.alpha[b]
            .partial_cmp(&ranked.alpha[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut rank = vec![0; n];
    for (k, &i) in order.iter().enumerate() {
        rank[i] = k;
    }
    let desc = |a: &[T]| {
        let mut v = a.to_vec();
        v.sort_by(|x, y| y.partial_cmp(x).unwrap());
        v
    };
    let a1 = desc(&d1.alpha);
    let a0 = desc(&d0.alpha);
    let shift: Vec<T> = (0..n).map(|k| a1[k] - a0[k]).collect();

    let e1 = eig_sorted(&d1.epsilon)?;
    let e0 = eig_sorted(&d0.epsilon)?;
    let basis = if tag == BasisTag::Untreated { &e0 } else { &e1 };
    let nn = T::count(n);
    let mut entries = Array2::from_shape_fn((n, n), |(i, j)| shift[rank[i]] + shift[rank[j]]);
    for r in 0..n {
        let w = (e1.values[r] - e0.values[r]) * nn;
        let col = basis.vectors.column(r);
        for i in 0..n {
            for j in 0..n {
                entries[[i, j]] += w * col[i] * col[j];
            }
        }
    }
    let warn = basis.min_gap().is_some_and(|g| g < T::lit(crate::ste::EIGENGAP_WARN));
    Ok(SteMatrix {
        entries,
        basis_tag: tag,
        eigengap_warning: warn,
    })
}
