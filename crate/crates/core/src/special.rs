//! Special functions needed by the diffraction model.

use crate::real::{cast, Real};

/// Bessel function of the first kind, order zero.
///
/// Power series for |x| <= 12, Abramowitz-Stegun 9.4.3 asymptotic form
/// beyond. Absolute error is below 1e-12 in the series region and below
/// 2e-8 in the asymptotic region, which is ample for the power-ratio
/// quadratures here.
pub fn bessel_j0<T: Real>(x: T) -> T {
    let ax = x.abs();
    if ax <= cast(12.0) {
        let q = -(ax * ax) / cast::<T>(4.0);
        let mut term = T::one();
        let mut sum = T::one();
        for k in 1..80 {
            let kf: T = cast(k as f64);
            term = term * q / (kf * kf);
            sum += term;
            if term.abs() <= T::epsilon() * sum.abs().max(T::one()) {
                break;
            }
        }
        sum
    } else {
        let z = cast::<T>(8.0) / ax;
        let y = z * z;
        let p0 = T::one()
            + y * (cast::<T>(-0.1098628627e-2)
                + y * (cast::<T>(0.2734510407e-4)
                    + y * (cast::<T>(-0.2073370639e-5) + y * cast::<T>(0.2093887211e-6))));
        let q0 = cast::<T>(-0.1562499995e-1)
            + y * (cast::<T>(0.1430488765e-3)
                + y * (cast::<T>(-0.6911147651e-5)
                    + y * (cast::<T>(0.7621095161e-6) + y * cast::<T>(-0.934935152e-7))));
        let chi = ax - cast::<T>(std::f64::consts::FRAC_PI_4);
        (cast::<T>(std::f64::consts::FRAC_2_PI) / ax).sqrt()
            * (chi.cos() * p0 - z * chi.sin() * q0)
    }
}
