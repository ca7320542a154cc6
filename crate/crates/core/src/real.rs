//! Scalar abstraction for the numerical core.
//!
//! All physics and finite-key arithmetic is generic over [`Real`] so the
//! same kernels run in `f32` or `f64`. Production paths use the `Scalar`
//! alias (`f64`) exported from the crate root; `f32` instantiations exist
//! mainly to keep the code honest about precision assumptions.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar usable throughout the core: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

/// Lift an `f64` constant into the working scalar type.
///
/// Panics only if the target type cannot represent any finite `f64`,
/// which cannot happen for the supported `f32`/`f64` instantiations.
#[inline]
pub fn cast<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant must convert into the scalar type")
}

/// `linspace`-style inclusive grid with `n` points from `lo` to `hi`.
pub fn linear_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(n >= 1, "grid needs at least one point");
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / cast::<T>((n - 1) as f64);
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + step * cast::<T>(i as f64)
            }
        })
        .collect()
}

/// Logarithmically spaced inclusive grid with `n` points from `lo` to `hi`.
///
/// Both endpoints must be strictly positive.
pub fn log_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(
        lo > T::zero() && hi > T::zero(),
        "log grid endpoints must be positive"
    );
    linear_grid(lo.ln(), hi.ln(), n)
        .into_iter()
        .map(|x| x.exp())
        .collect()
}
