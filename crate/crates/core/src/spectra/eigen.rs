//! Dense symmetric eigensolver: Householder tridiagonalisation followed by
//! implicit QL iterations (the EISPACK tred2/tql2 pair).

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 60;

/// Eigenvalues and eigenvectors (columns) of a symmetric matrix, in the order
/// produced by the QL sweep. Only the lower triangle is read.
pub fn symmetric_eigen<T: Scalar>(a: &Array2<T>) -> Result<(Vec<T>, Array2<T>)> {
    let n = a.nrows();
    if n == 0 {
        return Err(Error::Empty("matrix"));
    }
    let mut v = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            v[i][j] = a[[i, j]];
            v[j][i] = a[[i, j]];
        }
    }
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;
    let vectors = Array2::from_shape_fn((n, n), |(i, j)| v[i][j]);
    Ok((d, vectors))
}

fn tred2<T: Scalar>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) {
    let n = d.len();
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[n - 1][j];
    }
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = zero;
                v[j][i] = zero;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = zero;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let upd = f * e[k] + g * d[k];
                    v[k][j] -= upd;
                }
                d[j] = v[i - 1][j];
                v[i][j] = zero;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[n - 1][i] = v[i][i];
        v[i][i] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    let upd = g * d[k];
                    v[k][j] -= upd;
                }
            }
        }
        for k in 0..=i {
            v[k][i + 1] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = zero;
    }
    v[n - 1][n - 1] = T::one();
    e[0] = zero;
}

fn tql2<T: Scalar>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    let zero = T::zero();
    let one = T::one();
    let two = T::lit(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;
    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(Error::NoConvergence);
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        let hk = row[i + 1];
                        row[i + 1] = s * row[i] + c * hk;
                        row[i] = c * row[i] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
    Ok(())
}
