use core::fmt::{Debug, Display};
use core::iter::Sum;
use core::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating-point element type accepted by every numerical routine.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::FloatConst
    + ndarray::ScalarOperand
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    /// Converts a count.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative tolerance used when testing symmetry of input matrices.
    fn symmetry_tol() -> Self {
        let floor = Self::lit(1e-12);
        let eps = Self::epsilon() * Self::lit(64.0);
        if eps > floor {
            eps
        } else {
            floor
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
