//! Single-randomization baselines for vector outcomes: Fréchet–Hoeffding and
//! Makarov bounds, quantile treatment effects, and binned CATE samples.

use std::collections::{BTreeMap, BTreeSet};

use crate::bounds::{dte_candidates, IntervalBound, LowerBinding, UpperBinding};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectra::{distinct_sorted, Arm, OutcomeMatrix};

/// One outcome per agent.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeVector<T: Scalar> {
    values: Vec<T>,
    sorted: Vec<T>,
    pub arm: Option<Arm>,
}

impl<T: Scalar> OutcomeVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("outcome vector"));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self {
            values,
            sorted,
            arm: None,
        })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Right-continuous empirical CDF.
    pub fn cdf(&self, y: T) -> T {
        T::count(self.sorted.partition_point(|&v| v <= y)) / T::count(self.len())
    }

    /// Left-continuous generalized inverse of the empirical CDF.
    pub fn quantile(&self, u: T) -> Result<T> {
        if !(u > T::zero() && u <= T::one()) {
            return Err(Error::InvalidArgument(format!("u = {u} outside (0, 1]")));
        }
        let n = self.len();
        let nn = T::count(n);
        let mut k = (u * nn).ceil().to_usize().unwrap_or(n).clamp(1, n);
        while k > 1 && T::count(k - 1) / nn >= u {
            k -= 1;
        }
        while k < n && T::count(k) / nn < u {
            k += 1;
        }
        Ok(self.sorted[k - 1])
    }
}

/// Fréchet–Hoeffding bounds on `P(Y1 <= y1, Y0 <= y0)` from the marginals.
pub fn fh_bounds<T: Scalar>(f1: T, f0: T) -> Result<IntervalBound<T>> {
    for (name, f) in [("F1", f1), ("F0", f0)] {
        if !(f >= T::zero() && f <= T::one()) {
            return Err(Error::InvalidArgument(format!("{name} = {f} outside [0, 1]")));
        }
    }
    let s = f1 + f0 - T::one();
    let (lo, bl) = if s > T::zero() {
        (s, LowerBinding::BinarySum)
    } else {
        (T::zero(), LowerBinding::Zero)
    };
    let (hi, bu) = if f1 <= f0 {
        (f1, UpperBinding::Mass1)
    } else {
        (f0, UpperBinding::Mass0)
    };
    Ok(IntervalBound::clip(lo, hi, Some(bl), Some(bu)))
}

/// Makarov bounds on `P(Y1 - Y0 <= y)`.
pub fn makarov_bounds<T: Scalar>(
    y1: &OutcomeVector<T>,
    y0: &OutcomeVector<T>,
    y: T,
) -> Result<IntervalBound<T>> {
    if !y.is_finite() {
        return Err(Error::InvalidArgument("y must be finite".into()));
    }
    let g1 = distinct_sorted(&mut y1.values.clone());
    let g0 = distinct_sorted(&mut y0.values.clone());
    let mut lower = T::zero();
    let mut inf = T::zero();
    for (a, b) in dte_candidates(&g1, &g0, y) {
        let d = y1.cdf(a) - y0.cdf(b);
        lower = lower.max(d);
        inf = inf.min(d);
    }
    Ok(IntervalBound::clip(lower, T::one() + inf, None, None))
}

/// `Q1(u) - Q0(u)`.
pub fn qte<T: Scalar>(y1: &OutcomeVector<T>, y0: &OutcomeVector<T>, u: T) -> Result<T> {
    Ok(y1.quantile(u)? - y0.quantile(u)?)
}

/// Weighted CATE sample over ordered bin pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct CateSample<T: Scalar> {
    pub pairs: Vec<(i64, i64)>,
    pub values: Vec<T>,
    pub weights: Vec<T>,
    /// Pairs `(i, i)` of an agent with itself are counted in the cell means.
    pub self_pairs_included: bool,
}

pub fn binned_cate<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    bins1: &[i64],
    bins0: &[i64],
) -> Result<CateSample<T>> {
    if bins1.len() != y1.n() || bins0.len() != y0.n() {
        return Err(Error::Dimension(format!(
            "labels ({}, {}) do not match matrix sizes ({}, {})",
            bins1.len(),
            bins0.len(),
            y1.n(),
            y0.n()
        )));
    }
    let set1: BTreeSet<i64> = bins1.iter().copied().collect();
    let set0: BTreeSet<i64> = bins0.iter().copied().collect();
    if let Some(&b) = set1.symmetric_difference(&set0).next() {
        return Err(Error::UnmatchedBin(b));
    }
    let cell_sums = |y: &OutcomeMatrix<T>, bins: &[i64]| {
        let mut acc: BTreeMap<(i64, i64), (T, usize)> = BTreeMap::new();
        for ((i, j), &v) in y.entries().indexed_iter() {
            let e = acc.entry((bins[i], bins[j])).or_insert((T::zero(), 0));
            e.0 += v;
            e.1 += 1;
        }
        acc
    };
    let s1 = cell_sums(y1, bins1);
    let s0 = cell_sums(y0, bins0);
    let mut out = CateSample {
        pairs: Vec::new(),
        values: Vec::new(),
        weights: Vec::new(),
        self_pairs_included: true,
    };
    for (key, &(sum1, c1)) in &s1 {
        let (sum0, c0) = s0[key];
        out.pairs.push(*key);
        out.values
            .push(sum1 / T::count(c1) - sum0 / T::count(c0));
        out.weights.push(T::count(c1));
    }
    Ok(out)
}
