//! Spectral treatment effects, matrix lift, rank-invariance diagnostics, the
//! Hoffman–Wielandt gap and non-extrapolative counterfactual weights.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::assignment::linear_assignment;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectra::{spectrum, symmetric_eigen, OutcomeMatrix, Spectrum};

/// Basis used to expand eigenvalue differences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum BasisTag {
    Treated,
    Untreated,
    Custom,
}

/// Gap between consecutive eigenvalues (normalized scale) below which the
/// eigenbasis is treated as ill-defined.
pub const EIGENGAP_WARN: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct SteMatrix<T: Scalar> {
    pub entries: Array2<T>,
    pub basis_tag: BasisTag,
    pub eigengap_warning: bool,
}

impl<T: Scalar> SteMatrix<T> {
    pub fn frobenius(&self) -> T {
        frobenius(&self.entries)
    }

    /// Entries sorted ascending.
    pub fn sorted_entries(&self) -> Vec<T> {
        sorted_entries(&self.entries)
    }
}

pub(crate) fn frobenius<T: Scalar>(a: &Array2<T>) -> T {
    a.iter().map(|&x| x * x).sum::<T>().sqrt()
}

pub fn sorted_entries<T: Scalar>(a: &Array2<T>) -> Vec<T> {
    let mut v: Vec<T> = a.iter().copied().collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v
}

fn orthonormal_tol<T: Scalar>() -> T {
    T::lit(1e-8).max(T::epsilon() * T::lit(1e3))
}

fn same_size<T: Scalar>(y1: &OutcomeMatrix<T>, y0: &OutcomeMatrix<T>) -> Result<usize> {
    if y1.n() != y0.n() {
        return Err(Error::Dimension(format!(
            "arms must have equal size: {} vs {}",
            y1.n(),
            y0.n()
        )));
    }
    Ok(y1.n())
}

fn expand<T: Scalar>(diff: &[T], basis: &Array2<T>, n: usize) -> Array2<T> {
    let nn = T::count(n);
    let mut out = Array2::zeros((n, n));
    for (r, &d) in diff.iter().enumerate() {
        let w = d * nn;
        let col = basis.column(r);
        for i in 0..n {
            let wi = w * col[i];
            for j in 0..n {
                out[[i, j]] += wi * col[j];
            }
        }
    }
    out
}

fn gap_warning<T: Scalar>(s: &Spectrum<T>) -> bool {
    s.min_gap().is_some_and(|g| g < T::lit(EIGENGAP_WARN))
}

/// STE in an arbitrary orthonormal basis (columns).
pub fn ste<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    basis: &Array2<T>,
) -> Result<SteMatrix<T>> {
    let n = same_size(y1, y0)?;
    if basis.dim() != (n, n) {
        return Err(Error::Dimension(format!(
            "basis is {:?}, expected {n}x{n}",
            basis.dim()
        )));
    }
    let gram = basis.t().dot(basis);
    let tol = orthonormal_tol::<T>();
    for ((i, j), &g) in gram.indexed_iter() {
        let target = if i == j { T::one() } else { T::zero() };
        if (g - target).abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "basis is not orthonormal: (B'B)[{i}][{j}] = {g}"
            )));
        }
    }
    let s1 = spectrum(y1)?;
    let s0 = spectrum(y0)?;
    Ok(SteMatrix {
        entries: expand(&diff(&s1, &s0), basis, n),
        basis_tag: BasisTag::Custom,
        eigengap_warning: false,
    })
}

fn diff<T: Scalar>(s1: &Spectrum<T>, s0: &Spectrum<T>) -> Vec<T> {
    s1.values.iter().zip(s0.values.iter()).map(|(&a, &b)| a - b).collect()
}

fn ste_in_arm<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    tag: BasisTag,
) -> Result<SteMatrix<T>> {
    let n = same_size(y1, y0)?;
    let s1 = spectrum(y1)?;
    let s0 = spectrum(y0)?;
    let basis = if tag == BasisTag::Untreated { &s0 } else { &s1 };
    Ok(SteMatrix {
        entries: expand(&diff(&s1, &s0), &basis.vectors, n),
        basis_tag: tag,
        eigengap_warning: gap_warning(basis),
    })
}

/// STE on the treated: expanded in the eigenvectors of `Y1`.
pub fn stt<T: Scalar>(y1: &OutcomeMatrix<T>, y0: &OutcomeMatrix<T>) -> Result<SteMatrix<T>> {
    ste_in_arm(y1, y0, BasisTag::Treated)
}

/// STE on the untreated: expanded in the eigenvectors of `Y0`.
pub fn stu<T: Scalar>(y1: &OutcomeMatrix<T>, y0: &OutcomeMatrix<T>) -> Result<SteMatrix<T>> {
    ste_in_arm(y1, y0, BasisTag::Untreated)
}

/// `W = Φ1 Φ0'`, so that `stt = Y1 - W Y0 W'`.
pub fn counterfactual_weights<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
) -> Result<Array2<T>> {
    same_size(y1, y0)?;
    let s1 = spectrum(y1)?;
    let s0 = spectrum(y0)?;
    Ok(s1.vectors.dot(&s0.vectors.t()))
}

/// Spectral functional calculus `Σ g(n σ_r) φ_r φ_r'`.
pub fn matrix_lift<T: Scalar, G: Fn(T) -> T>(g: G, y: &OutcomeMatrix<T>) -> Result<OutcomeMatrix<T>> {
    let s = spectrum(y)?;
    let n = y.n();
    let nn = T::count(n);
    let mut vals = Vec::with_capacity(n);
    for &l in s.values.iter() {
        let x = l * nn;
        let gx = g(x);
        if !gx.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lifted function is not finite at eigenvalue {x}"
            )));
        }
        vals.push(gx / nn);
    }
    OutcomeMatrix::new(expand(&vals, &s.vectors, n))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankInvarianceReport<T: Scalar> {
    pub invariant: bool,
    /// Largest sine of a principal angle between matched eigenspaces.
    pub max_eigenvector_misalignment: T,
    /// Largest increase of the Y1 Rayleigh quotient along descending Y0 eigenvalues.
    pub g_monotonicity_violation: T,
    pub eigengap_warning: bool,
}

fn clusters<T: Scalar>(values: &[T], tol: T) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for r in 1..=values.len() {
        if r == values.len() || values[r - 1] - values[r] >= tol {
            out.push((start, r));
            start = r;
        }
    }
    out
}

/// Largest sine of the principal angles between span(u) and span(v); `v`
/// has orthonormal columns spanning at least as many dimensions as `u`.
fn max_sine<T: Scalar>(u: &Array2<T>, v: &Array2<T>) -> Result<T> {
    let r = u - &v.dot(&v.t().dot(u));
    let (vals, _) = symmetric_eigen(&r.t().dot(&r))?;
    let top = vals.into_iter().fold(T::zero(), |a, b| a.max(b));
    Ok(top.max(T::zero()).sqrt().min(T::one()))
}

/// Checks that `Y1` shares `Y0`'s eigenspaces and maps its eigenvalues
/// through a nondecreasing function.
pub fn rank_invariance_check<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    tol: T,
) -> Result<RankInvarianceReport<T>> {
    let n = same_size(y1, y0)?;
    let s0 = spectrum(y0)?;
    let s1 = spectrum(y1)?;
    let v0 = s0.values.as_slice().unwrap();
    let v1 = s1.values.as_slice().unwrap();
    let c0 = clusters(v0, tol);
    let c1 = clusters(v1, tol);

    let mut misalign = T::zero();
    for &(a, b) in &c0 {
        let lo = c1.iter().filter(|c| c.1 > a).map(|c| c.0).min().unwrap_or(a);
        let hi = c1.iter().filter(|c| c.0 < b).map(|c| c.1).max().unwrap_or(b);
        let u = s0.vectors.slice(ndarray::s![.., a..b]).to_owned();
        let v = s1.vectors.slice(ndarray::s![.., lo..hi]).to_owned();
        misalign = misalign.max(max_sine(&u, &v)?);
    }

    let nn = T::count(n);
    let y1e = y1.entries();
    let mu: Vec<T> = (0..n)
        .map(|r| {
            let phi = s0.vectors.column(r);
            phi.dot(&y1e.dot(&phi)) / nn
        })
        .collect();
    let mut cluster_of = vec![0; n];
    for (k, &(a, b)) in c0.iter().enumerate() {
        for c in cluster_of.iter_mut().take(b).skip(a) {
            *c = k;
        }
    }
    let mut violation = T::zero();
    for s in 0..n {
        for r in 0..s {
            if cluster_of[r] != cluster_of[s] {
                violation = violation.max(mu[s] - mu[r]);
            }
        }
    }
    let warn = gap_warning(&s0) || gap_warning(&s1);
    Ok(RankInvarianceReport {
        invariant: misalign <= tol && violation <= tol,
        max_eigenvector_misalignment: misalign,
        g_monotonicity_violation: violation,
        eigengap_warning: warn,
    })
}

/// `(Σ (σ_r1 - σ_r0)², ||Y1 - Y0||_F² / n²)`.
pub fn hw_gap<T: Scalar>(y1: &OutcomeMatrix<T>, y0: &OutcomeMatrix<T>) -> Result<(T, T)> {
    let n = same_size(y1, y0)?;
    let s1 = spectrum(y1)?;
    let s0 = spectrum(y0)?;
    let lhs = diff(&s1, &s0).iter().map(|&d| d * d).sum();
    let d = y1.entries() - y0.entries();
    let rhs = d.iter().map(|&x| x * x).sum::<T>() / T::count(n * n);
    Ok((lhs, rhs))
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightsResult<T: Scalar> {
    /// Doubly stochastic weight matrix.
    pub d: Array2<T>,
    pub objective: T,
    /// Objective at the start and after every accepted step.
    pub history: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

pub const DEFAULT_MAX_ITER: usize = 500;
pub const DEFAULT_TOL: f64 = 1e-8;

fn inner<T: Scalar>(a: &Array2<T>, b: &Array2<T>) -> T {
    a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum()
}

fn residual<T: Scalar>(d: &Array2<T>, y1: &Array2<T>, y0: &Array2<T>) -> Array2<T> {
    d.dot(y0).dot(&d.t()) - y1
}

/// Minimizes `||Y1 - D Y0 D'||_F²` over doubly stochastic `D` by Frank–Wolfe
/// with an assignment oracle and exact line search, starting from the identity.
pub fn non_extrapolative_weights<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    max_iter: usize,
    tol: T,
) -> Result<WeightsResult<T>> {
    let n = same_size(y1, y0)?;
    if max_iter < 1 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    let (a1, a0) = (y1.entries(), y0.entries());
    let mut d = Array2::<T>::eye(n);
    let mut r = residual(&d, a1, a0);
    let mut f = inner(&r, &r);
    let mut history = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    let four = T::lit(4.0);
    while iterations < max_iter {
        if f <= T::zero() {
            converged = true;
            break;
        }
        iterations += 1;
        let grad = r.dot(&d).dot(a0) * four;
        let perm = linear_assignment(&grad);
        let mut e = -d.clone();
        for (i, &j) in perm.iter().enumerate() {
            e[[i, j]] += T::one();
        }
        let gap = -inner(&grad, &e);
        if gap <= tol * f.max(T::one()) {
            converged = true;
            break;
        }
        let ey0 = e.dot(a0);
        let a = ey0.dot(&d.t());
        let a = &a + &a.t();
        let b = ey0.dot(&e.t());
        let coef = [
            f,
            T::lit(2.0) * inner(&r, &a),
            inner(&a, &a) + T::lit(2.0) * inner(&r, &b),
            T::lit(2.0) * inner(&a, &b),
            inner(&b, &b),
        ];
        let gamma = quartic_argmin(&coef);
        if gamma <= T::zero() {
            converged = true;
            break;
        }
        let cand = &d + &(&e * gamma);
        let rc = residual(&cand, a1, a0);
        let fc = inner(&rc, &rc);
        if fc > f {
            converged = true;
            break;
        }
        let rel = (f - fc) / f;
        d = cand;
        r = rc;
        f = fc;
        history.push(f);
        if rel < tol {
            converged = true;
            break;
        }
    }
    // convex combinations can leave -1e-17 residue where a weight vanished
    d.mapv_inplace(|x| x.max(T::zero()));
    let r = residual(&d, a1, a0);
    let objective = inner(&r, &r);
    Ok(WeightsResult {
        d,
        objective,
        history,
        iterations,
        converged,
    })
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// Minimizer on `[0, 1]` of `c0 + c1 γ + c2 γ² + c3 γ³ + c4 γ⁴`.
fn quartic_argmin<T: Scalar>(c: &[T; 5]) -> T {
    let cf: Vec<f64> = c.iter().map(|x| x.to_f64_lossy()).collect();
    let d1 = [cf[1], 2.0 * cf[2], 3.0 * cf[3], 4.0 * cf[4]];
    let d2 = [2.0 * cf[2], 6.0 * cf[3], 12.0 * cf[4]];
    let mut knots = vec![0.0, 1.0];
    knots.extend(quadratic_roots(d2[0], d2[1], d2[2]).into_iter().filter(|x| *x > 0.0 && *x < 1.0));
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut cands = vec![0.0, 1.0];
    for w in knots.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (poly(&d1, lo), poly(&d1, hi));
        if flo == 0.0 {
            cands.push(lo);
            continue;
        }
        if flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if poly(&d1, mid).signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        cands.push(0.5 * (lo + hi));
    }
    let best = cands
        .into_iter()
        .map(|g| (poly(&cf, g), g))
        .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
    T::lit(best.1)
}

fn quadratic_roots(c0: f64, c1: f64, c2: f64) -> Vec<f64> {
    if c2 == 0.0 {
        return if c1 == 0.0 { vec![] } else { vec![-c0 / c1] };
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
    let mut out = vec![q / c2];
    if q != 0.0 {
        out.push(c0 / q);
    }
    out
}

/// Objective `||Y1 - D Y0 D'||_F²` for a given weight matrix.
pub fn weights_objective<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    d: &Array2<T>,
) -> T {
    let r = residual(d, y1.entries(), y0.entries());
    inner(&r, &r)
}
