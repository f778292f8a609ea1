//! Kernel-smoothed plug-in estimators of indicator eigenvalue products, DPO
//! bounds and the STE distribution function.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::bounds::{dpo_from_parts, IntervalBound};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectra::{eig_dot_padded, eig_sorted, OutcomeMatrix, Pairing, Spectrum};
use crate::ste::{stt, stu, BasisTag};

/// Smooth survival-type kernel: 1 far left, 0 far right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmoothKernel {
    /// `1 - ∫_{-1}^{u} (15/16)(1 - t²)² dt` on `[-1, 1]`.
    #[serde(rename = "symmetricQuartic")]
    SymmetricQuartic,
    /// `1 - (6u⁵ - 15u⁴ + 10u³)` on `(0, 1)`, with `K(0) = 1`.
    #[serde(rename = "oneSidedQuintic")]
    OneSidedQuintic,
}

impl std::str::FromStr for SmoothKernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetricQuartic" => Ok(Self::SymmetricQuartic),
            "oneSidedQuintic" => Ok(Self::OneSidedQuintic),
            _ => Err(Error::InvalidArgument(format!("unknown kernel {s}"))),
        }
    }
}

impl SmoothKernel {
    pub fn evaluate<T: Scalar>(self, u: T) -> T {
        let (zero, one) = (T::zero(), T::one());
        match self {
            Self::SymmetricQuartic => {
                if u <= -one {
                    one
                } else if u >= one {
                    zero
                } else {
                    let u3 = u * u * u;
                    let g = T::lit(15.0 / 16.0) * (u - T::lit(2.0 / 3.0) * u3 + u3 * u * u / T::lit(5.0))
                        + T::lit(0.5);
                    one - g
                }
            }
            Self::OneSidedQuintic => {
                if u <= zero {
                    one
                } else if u >= one {
                    zero
                } else {
                    let u3 = u * u * u;
                    one - u3 * (T::lit(10.0) + u * (T::lit(-15.0) + T::lit(6.0) * u))
                }
            }
        }
    }

    pub fn derivative<T: Scalar>(self, u: T) -> T {
        let (zero, one) = (T::zero(), T::one());
        match self {
            Self::SymmetricQuartic => {
                if u <= -one || u >= one {
                    zero
                } else {
                    let w = one - u * u;
                    -T::lit(15.0 / 16.0) * w * w
                }
            }
            Self::OneSidedQuintic => {
                if u <= zero || u >= one {
                    zero
                } else {
                    let w = one - u;
                    -T::lit(30.0) * u * u * w * w
                }
            }
        }
    }

    pub fn second_derivative<T: Scalar>(self, u: T) -> T {
        let (zero, one) = (T::zero(), T::one());
        match self {
            Self::SymmetricQuartic => {
                if u <= -one || u >= one {
                    zero
                } else {
                    T::lit(15.0 / 4.0) * u * (one - u * u)
                }
            }
            Self::OneSidedQuintic => {
                if u <= zero || u >= one {
                    zero
                } else {
                    -T::lit(60.0) * u * (T::lit(2.0) * u - one) * (u - one)
                }
            }
        }
    }
}

fn check_h<T: Scalar>(h: T) -> Result<()> {
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("bandwidth {h} must be positive")));
    }
    Ok(())
}

/// Entrywise `K((Y - y) / h)`.
pub fn smoothed_indicator<T: Scalar>(y: &OutcomeMatrix<T>, t: T, h: T, kernel: SmoothKernel) -> Array2<T> {
    y.entries().mapv(|v| kernel.evaluate((v - t) / h))
}

fn smoothed_spectrum<T: Scalar>(
    y: &OutcomeMatrix<T>,
    t: T,
    h: T,
    kernel: SmoothKernel,
) -> Result<Spectrum<T>> {
    check_h(h)?;
    eig_sorted(&smoothed_indicator(y, t, h, kernel))
}

/// Sorted cross-product of the smoothed indicator spectra.
pub fn smoothed_eig_product<T: Scalar>(
    yt: &OutcomeMatrix<T>,
    ys: &OutcomeMatrix<T>,
    t: T,
    s: T,
    h: T,
    kernel: SmoothKernel,
) -> Result<T> {
    let a = smoothed_spectrum(yt, t, h, kernel)?;
    let b = smoothed_spectrum(ys, s, h, kernel)?;
    Ok(eig_dot_padded(
        a.values.as_slice().unwrap(),
        b.values.as_slice().unwrap(),
        Pairing::Sorted,
    ))
}

/// DPO branch algebra on smoothed spectra with masses `Σ λ̂²`.
pub fn smoothed_dpo_bounds<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    t1: T,
    t0: T,
    h: T,
    kernel: SmoothKernel,
) -> Result<IntervalBound<T>> {
    let a = smoothed_spectrum(y1, t1, h, kernel)?;
    let b = smoothed_spectrum(y0, t0, h, kernel)?;
    Ok(dpo_from_parts(
        a.mass(),
        a.values.as_slice().unwrap(),
        b.mass(),
        b.values.as_slice().unwrap(),
        T::one(),
    ))
}

/// `(1/n²) Σ K((STE[i][j] - y) / h)` for the STE in the chosen arm's basis.
pub fn smoothed_ste_cdf<T: Scalar>(
    y1: &OutcomeMatrix<T>,
    y0: &OutcomeMatrix<T>,
    basis_arm: BasisTag,
    y: T,
    h: T,
    kernel: SmoothKernel,
) -> Result<T> {
    check_h(h)?;
    let s = match basis_arm {
        BasisTag::Untreated => stu(y1, y0)?,
        _ => stt(y1, y0)?,
    };
    Ok(smoothed_cdf(s.entries.iter().copied(), y, h, kernel))
}

/// Smoothed empirical CDF of a sample.
pub fn smoothed_cdf<T: Scalar, I: IntoIterator<Item = T>>(sample: I, y: T, h: T, kernel: SmoothKernel) -> T {
    let (mut acc, mut n) = (T::zero(), 0usize);
    for v in sample {
        acc += kernel.evaluate((v - y) / h);
        n += 1;
    }
    (acc / T::count(n.max(1))).max(T::zero()).min(T::one())
}

/// `max - min` of the entries.
pub fn entry_scale<T: Scalar>(y: &OutcomeMatrix<T>) -> T {
    let lo = y.entries().iter().copied().fold(T::infinity(), T::min);
    let hi = y.entries().iter().copied().fold(T::neg_infinity(), T::max);
    hi - lo
}

/// `1.06 · sd(entries) · n^(-1/3)`; falls back to a unit-scale bandwidth for
/// constant matrices.
pub fn default_bandwidth<T: Scalar>(y: &OutcomeMatrix<T>) -> T {
    let e = y.entries();
    let k = T::count(e.len());
    let mean = e.iter().copied().sum::<T>() / k;
    let var = e.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / k;
    let sd = var.sqrt();
    let n = T::count(y.n());
    let h = T::lit(1.06) * sd * n.powf(T::lit(-1.0 / 3.0));
    if h > T::zero() {
        h
    } else {
        T::lit(1e-3) * mean.abs().max(T::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KERNELS: [SmoothKernel; 2] = [SmoothKernel::SymmetricQuartic, SmoothKernel::OneSidedQuintic];

    #[test]
    fn kernel_anchors() {
        let q = SmoothKernel::SymmetricQuartic;
        assert_eq!(q.evaluate(-2.0f64), 1.0);
        assert_eq!(q.evaluate(2.0f64), 0.0);
        assert!((q.evaluate(0.0f64) - 0.5).abs() < 1e-15);
        assert!(q.evaluate(1.0f64 - 1e-12).abs() < 1e-12);
        let p = SmoothKernel::OneSidedQuintic;
        assert_eq!(p.evaluate(0.0f64), 1.0);
        assert_eq!(p.evaluate(1.0f64), 0.0);
        assert!((p.evaluate(0.5f64) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for k in KERNELS {
            for i in -120..=120 {
                let u = i as f64 / 100.0 + 0.003;
                let h = 1e-6;
                let fd = (k.evaluate(u + h) - k.evaluate(u - h)) / (2.0 * h);
                assert!((fd - k.derivative(u)).abs() < 1e-6, "{k:?} at {u}");
                let fd2 = (k.derivative(u + h) - k.derivative(u - h)) / (2.0 * h);
                assert!((fd2 - k.second_derivative(u)).abs() < 1e-5, "{k:?} at {u}");
            }
        }
    }

    #[test]
    fn monotone_and_bounded() {
        for k in KERNELS {
            let mut prev = 1.0f64;
            for i in -300..=300 {
                let v = k.evaluate(i as f64 / 200.0);
                assert!((0.0..=1.0).contains(&v));
                assert!(v <= prev + 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn rejects_nonpositive_bandwidth() {
        let y = OutcomeMatrix::from_rows(&[vec![0.0f64]]).unwrap();
        assert!(smoothed_eig_product(&y, &y, 0.0, 0.0, 0.0, SmoothKernel::OneSidedQuintic).is_err());
    }
}
