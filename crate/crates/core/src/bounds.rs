//! Eigenvalue bounds on the joint distribution of potential outcomes (DPO) and
//! on the distribution of treatment effects (DTE), binary cell bounds and
//! weighted aggregation across networks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectra::{
    distinct_sorted, eig_dot_padded, indicator, with_sentinels, OutcomeMatrix, Pairing,
};

/// Branch attaining the lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum LowerBinding {
    BinarySum,
    Antisorted,
    Zero,
}

/// Branch attaining the upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum UpperBinding {
    Mass1,
    Mass0,
    SortedProduct,
}

/// A `[lower, upper]` interval on a probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalBound<T: Scalar> {
    pub lower: T,
    pub upper: T,
    pub binding_lower: Option<LowerBinding>,
    pub binding_upper: Option<UpperBinding>,
    /// True when clipping to `[0, 1]` changed an endpoint.
    pub clipped: bool,
}

impl<T: Scalar> IntervalBound<T> {
    /// Clips both endpoints to `[0, 1]`, recording whether anything moved.
    pub fn clip(
        lower: T,
        upper: T,
        binding_lower: Option<LowerBinding>,
        binding_upper: Option<UpperBinding>,
    ) -> Self {
        let (zero, one) = (T::zero(), T::one());
        let lo = lower.max(zero).min(one);
        let mut hi = upper.max(zero).min(one);
        let mut clipped = lo != lower || hi != upper;
        // rounding can cross the endpoints by a few ulps
        if lo > hi && lo - hi <= crossing_slack::<T>() {
            hi = lo;
            clipped = true;
        }
        Self {
            lower: lo,
            upper: hi,
            binding_lower,
            binding_upper,
            clipped,
        }
    }

    pub fn contains(&self, lo: T, hi: T, tol: T) -> bool {
        self.lower <= lo + tol && hi <= self.upper + tol
    }

    pub fn width(&self) -> T {
        self.upper - self.lower
    }
}

fn crossing_slack<T: Scalar>() -> T {
    (T::epsilon() * T::lit(1e3)).max(T::lit(1e-9))
}

/// Options shared by the matrix bound routines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BoundOptions {
    /// Drop the `i == j` pairs (undefined self-links). The eigenvalue branches
    /// are rescaled by `n / (n - 1)`, which makes them valid but no longer the
    /// exact all-pairs algebra. Requires equal arm sizes.
    pub exclude_diagonal: bool,
}

/// Mass and spectrum of one thresholded arm.
#[derive(Clone, Debug)]
pub(crate) struct ArmSpectrum<T: Scalar> {
    pub mass: T,
    pub values: Vec<T>,
}

pub(crate) fn arm_spectrum<T: Scalar>(
    y: &OutcomeMatrix<T>,
    t: T,
    exclude_diagonal: bool,
) -> Result<ArmSpectrum<T>> {
    let mut a = indicator(y, t)?;
    let n = a.n();
    if exclude_diagonal {
        for i in 0..n {
            a.entries[[i, i]] = T::zero();
        }
    }
    let spec = a.spectrum()?;
    let cells = if exclude_diagonal { n * (n - 1) } else { n * n };
    // binary idempotence: Σλ² equals the fraction of ones exactly
    let mass = a.count() / T::count(cells);
    Ok(ArmSpectrum {
        mass,
        values: spec.values.to_vec(),
    })
}

/// Prop-1 branch algebra from masses and (unpadded) spectra. `scale`
/// multiplies the eigenvalue products.
pub(crate) fn dpo_from_parts<T: Scalar>(
    m1: T,
    l1: &[T],
    m0: T,
    l0: &[T],
    scale: T,
) -> IntervalBound<T> {
    let sorted = eig_dot_padded(l1, l0, Pairing::Sorted) * scale;
    let anti = eig_dot_padded(l1, l0, Pairing::Antisorted) * scale;
    let lower_terms = [
        (m1 + m0 - T::one(), LowerBinding::BinarySum),
        (anti, LowerBinding::Antisorted),
        (T::zero(), LowerBinding::Zero),
    ];
    let upper_terms = [
        (m1, UpperBinding::Mass1),
        (m0, UpperBinding::Mass0),
        (sorted, UpperBinding::SortedProduct),
    ];
    let (lo, bl) = lower_terms
        .iter()
        .copied()
        .fold(lower_terms[0], |a, b| if b.0 > a.0 { b } else { a });
    let (hi, bu) = upper_terms
        .iter()
        .copied()
        .fold(upper_terms[0], |a, b| if b.0 < a.0 { b } else { a });
    IntervalBound::clip(lo, hi, Some(bl), Some(bu))
}

fn check_exclusion<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    opts: &BoundOptions,
) -> Result<T> {
    if !opts.exclude_diagonal {
        return Ok(T::one());
    }
    if y1.n() != y0.n() {
        return Err(Error::Dimension(
            "excluding the diagonal requires equal arm sizes".into(),
        ));
    }
    if y1.n() < 2 {
        return Err(Error::InvalidArgument(
            "excluding the diagonal requires at least two agents".into(),
        ));
    }
    let n = T::count(y1.n());
    Ok(n / (n - T::one()))
}

/// Bounds on `F(y1, y0) = P(Y1 <= y1, Y0 <= y0)` from indicator spectra.
pub fn dpo_bounds<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    t1: T,
    t0: T,
) -> Result<IntervalBound<T>> {
    dpo_bounds_with(y1, y0, t1, t0, &BoundOptions::default())
}

pub fn dpo_bounds_with<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    t1: T,
    t0: T,
    opts: &BoundOptions,
) -> Result<IntervalBound<T>> {
    let scale = check_exclusion(y1, y0, opts)?;
    let a = arm_spectrum(y1, t1, opts.exclude_diagonal)?;
    let b = arm_spectrum(y0, t0, opts.exclude_diagonal)?;
    Ok(dpo_from_parts(a.mass, &a.values, b.mass, &b.values, scale))
}

/// Distinct entry values of one matrix with sentinels.
pub fn matrix_grid<T: Scalar>(y: &OutcomeMatrix<T>) -> Vec<T> {
    let mut v: Vec<T> = y.entries().iter().copied().collect();
    with_sentinels(distinct_sorted(&mut v))
}

/// Candidate `(y1, y0)` pairs with `y1 - y0 = y`: every `v` in
/// `grid1 ∪ (grid0 + y)` and the same point nudged down by half the smallest gap.
pub fn dte_candidates<T: Scalar>(grid1: &[T], grid0: &[T], y: T) -> Vec<(T, T)> {
    let mut vs: Vec<T> = grid1
        .iter()
        .copied()
        .chain(grid0.iter().map(|&g| g + y))
        .collect();
    let vs = distinct_sorted(&mut vs);
    let min_gap = vs
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g > T::zero())
        .fold(None, |m: Option<T>, g| Some(m.map_or(g, |m| m.min(g))));
    let delta = min_gap.map_or(T::one(), |g| g * T::lit(0.5));
    let mut out = Vec::with_capacity(2 * vs.len());
    for &v in &vs {
        out.push((v, v - y));
        let w = v - delta;
        out.push((w, w - y));
    }
    out
}

/// Prop-2 branch algebra over candidates; `eval` returns `(m1, m0, U)` where
/// `U` is an upper bound on `F(y1, y0)`.
pub fn dte_from_dpo<T, F>(candidates: &[(T, T)], eval: F) -> Result<IntervalBound<T>>
where
    T: Scalar,
    F: Fn(T, T) -> Result<(T, T, T)> + Sync,
{
    let parts: Vec<(T, T)> = candidates
        .par_iter()
        .map(|&(a, b)| {
            let (m1, m0, u) = eval(a, b)?;
            let lo = (m1 - m0).max(m1 - u).max(T::zero());
            let hi = (m1 - m0).min(u - m0).min(T::zero());
            Ok((lo, hi))
        })
        .collect::<Result<_>>()?;
    let lower = parts.iter().fold(T::zero(), |a, p| a.max(p.0));
    let upper = T::one() + parts.iter().fold(T::zero(), |a, p| a.min(p.1));
    Ok(IntervalBound::clip(lower, upper, None, None))
}

/// Bounds on `Δ(y) = P(Y1 - Y0 <= y)`.
pub fn dte_bounds<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    y: T,
) -> Result<IntervalBound<T>> {
    dte_bounds_with(y1, y0, y, &BoundOptions::default())
}

pub fn dte_bounds_with<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    y: T,
    opts: &BoundOptions,
) -> Result<IntervalBound<T>> {
    if !y.is_finite() {
        return Err(Error::InvalidArgument("y must be finite".into()));
    }
    let scale = check_exclusion(y1, y0, opts)?;
    let cands = dte_candidates(&matrix_grid(y1), &matrix_grid(y0), y);
    dte_from_dpo(&cands, |a, b| {
        let s1 = arm_spectrum(y1, a, opts.exclude_diagonal)?;
        let s0 = arm_spectrum(y0, b, opts.exclude_diagonal)?;
        let u = dpo_from_parts(s1.mass, &s1.values, s0.mass, &s0.values, scale).upper;
        Ok((s1.mass, s0.mass, u))
    })
}

/// Pointwise DTE bounds along a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DteCurve<T: Scalar> {
    pub grid: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub monotonized: bool,
}

pub fn dte_curve<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    grid: &[T],
    monotonize: bool,
) -> Result<DteCurve<T>> {
    dte_curve_with(y1, y0, grid, monotonize, &BoundOptions::default())
}

pub fn dte_curve_with<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    grid: &[T],
    monotonize: bool,
    opts: &BoundOptions,
) -> Result<DteCurve<T>> {
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument("grid must be sorted ascending".into()));
    }
    let pts: Vec<IntervalBound<T>> = grid
        .iter()
        .map(|&y| dte_bounds_with(y1, y0, y, opts))
        .collect::<Result<_>>()?;
    let mut lower: Vec<T> = pts.iter().map(|b| b.lower).collect();
    let mut upper: Vec<T> = pts.iter().map(|b| b.upper).collect();
    if monotonize {
        for k in 1..lower.len() {
            lower[k] = lower[k].max(lower[k - 1]);
        }
        for k in (0..upper.len().saturating_sub(1)).rev() {
            upper[k] = upper[k].min(upper[k + 1]);
        }
    }
    Ok(DteCurve {
        grid: grid.to_vec(),
        lower,
        upper,
        monotonized: monotonize,
    })
}

/// Bounds on the four joint cells `P(Y1 = a, Y0 = b)` of binary outcomes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellBounds<T: Scalar> {
    pub c11: IntervalBound<T>,
    pub c10: IntervalBound<T>,
    pub c01: IntervalBound<T>,
    pub c00: IntervalBound<T>,
    /// `F1(0)`, `F0(0)`.
    pub f1: T,
    pub f0: T,
}

impl<T: Scalar> CellBounds<T> {
    /// Cells in the order (1,1), (1,0), (0,1), (0,0).
    pub fn cells(&self) -> [(&'static str, IntervalBound<T>); 4] {
        [
            ("(1,1)", self.c11),
            ("(1,0)", self.c10),
            ("(0,1)", self.c01),
            ("(0,0)", self.c00),
        ]
    }
}

fn require_binary<T: Scalar>(y: &OutcomeMatrix<T>, name: &str) -> Result<()> {
    if let Some(((i, j), _)) = y
        .entries()
        .indexed_iter()
        .find(|(_, &x)| x != T::zero() && x != T::one())
    {
        return Err(Error::InvalidArgument(format!(
            "{name} has a non-binary entry at ({i}, {j})"
        )));
    }
    Ok(())
}

pub fn binary_cell_bounds<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
) -> Result<CellBounds<T>> {
    binary_cell_bounds_with(y1, y0, &BoundOptions::default())
}

pub fn binary_cell_bounds_with<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    opts: &BoundOptions,
) -> Result<CellBounds<T>> {
    require_binary(y1, "Y1")?;
    require_binary(y0, "Y0")?;
    let scale = check_exclusion(y1, y0, opts)?;
    let a = arm_spectrum(y1, T::zero(), opts.exclude_diagonal)?;
    let b = arm_spectrum(y0, T::zero(), opts.exclude_diagonal)?;
    let f = dpo_from_parts(a.mass, &a.values, b.mass, &b.values, scale);
    let (l, u, f1, f0) = (f.lower, f.upper, a.mass, b.mass);
    let one = T::one();
    Ok(CellBounds {
        c00: f,
        c01: IntervalBound::clip(f1 - u, f1 - l, None, None),
        c10: IntervalBound::clip(f0 - u, f0 - l, None, None),
        c11: IntervalBound::clip(one - f1 - f0 + l, one - f1 - f0 + u, None, None),
        f1,
        f0,
    })
}

/// Weighted mean of interval endpoints with weights normalized to sum one.
pub fn weighted_average_bounds<T: Scalar>(
    bounds: &[IntervalBound<T>],
    weights: &[T],
) -> Result<IntervalBound<T>> {
    if bounds.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} bounds but {} weights",
            bounds.len(),
            weights.len()
        )));
    }
    if bounds.is_empty() {
        return Err(Error::Empty("bounds"));
    }
    if let Some(k) = weights.iter().position(|&w| !(w >= T::zero()) || !w.is_finite()) {
        return Err(Error::InvalidArgument(format!("weight {k} is negative or not finite")));
    }
    let total: T = weights.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::InvalidArgument("weights must have a positive sum".into()));
    }
    let lo: T = bounds.iter().zip(weights).map(|(b, &w)| b.lower * w).sum::<T>() / total;
    let hi: T = bounds.iter().zip(weights).map(|(b, &w)| b.upper * w).sum::<T>() / total;
    Ok(IntervalBound::clip(lo, hi, None, None))
}
