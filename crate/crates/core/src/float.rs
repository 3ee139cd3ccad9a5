//! `f64` math for `no_std`, backed by `libm`.
//!
//! The compiler sees the unstable inherent float methods of `core` and
//! reports imports of [`Real`] as unused; they are required all the same.

#[allow(dead_code)]
pub(crate) trait Real: Copy {
    fn ln(self) -> f64;
    fn exp(self) -> f64;
    fn sqrt(self) -> f64;
    fn powi(self, e: i32) -> f64;
    fn exp_m1(self) -> f64;
    fn ln_1p(self) -> f64;
    fn ceil(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn ln(self) -> f64 {
        libm::log(self)
    }
    #[inline]
    fn exp(self) -> f64 {
        libm::exp(self)
    }
    #[inline]
    fn sqrt(self) -> f64 {
        libm::sqrt(self)
    }
    #[inline]
    fn powi(self, e: i32) -> f64 {
        libm::pow(self, e as f64)
    }
    #[inline]
    fn exp_m1(self) -> f64 {
        libm::expm1(self)
    }
    #[inline]
    fn ln_1p(self) -> f64 {
        libm::log1p(self)
    }
    #[inline]
    fn ceil(self) -> f64 {
        libm::ceil(self)
    }
}

/// `(e^x - 1) / x`, continuous at zero.
#[inline]
pub(crate) fn exprel(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + 0.5 * x
    } else {
        x.exp_m1() / x
    }
}
