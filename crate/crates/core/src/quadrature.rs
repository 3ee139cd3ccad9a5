//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use alloc::vec::Vec;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).abs();
    Piece { a, b, value, error }
}

/// Integrates `f` over the finite interval `[a, b]` until the estimated
/// error drops below `tol` in either absolute or relative terms.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonFinite("integration bounds"));
    }
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let mut pieces: Vec<Piece> = Vec::with_capacity(64);
    pieces.push(kronrod(&f, a, b));
    let mut evaluations = 15;
    loop {
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Quadrature(error));
        }
        if error <= tol || error <= tol * value.abs() {
            return Ok(Integral { value, error, evaluations });
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(error));
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| {
                if p.error > acc.1 {
                    (i, p.error)
                } else {
                    acc
                }
            });
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // interval collapsed to machine resolution
            return Err(Error::Quadrature(error));
        }
        pieces.push(kronrod(&f, p.a, mid));
        pieces.push(kronrod(&f, mid, p.b));
        evaluations += 30;
    }
}

/// Integrates `f` over `(0, ∞)`, splitting at `split > 0`.
///
/// The head `(0, split]` is mapped through `y = split · u⁴`, which smooths
/// integrable algebraic singularities at the origin; the tail is mapped to
/// the unit interval with `y = split + t / (1 - t)`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, split: f64, tol: f64) -> Result<Integral> {
    if !(split > 0.0 && split.is_finite()) {
        return Err(Error::Domain {
            name: "split",
            value: split,
            constraint: "split > 0",
        });
    }
    let head = integrate(
        |u: f64| {
            let u3 = u * u * u;
            let y = split * u3 * u;
            if y <= 0.0 {
                return 0.0;
            }
            f(y) * 4.0 * split * u3
        },
        0.0,
        1.0,
        0.5 * tol,
    )?;
    let tail = integrate(
        |t: f64| {
            let s = 1.0 - t;
            let y = split + t / s;
            if !y.is_finite() {
                return 0.0;
            }
            f(y) / (s * s)
        },
        0.0,
        1.0,
        0.5 * tol,
    )?;
    Ok(Integral {
        value: head.value + tail.value,
        error: head.error + tail.error,
        evaluations: head.evaluations + tail.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    #[allow(unused_imports)]
    use crate::float::Real;

    #[test]
    fn kronrod_rule_is_exact_for_degree_22() {
        for deg in 0..=22 {
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            let p = kronrod(&|x: f64| x.powi(deg), -1.0, 1.0);
            assert!((p.value - exact).abs() < 1e-14, "degree {deg}");
        }
        let w: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        assert!((w - 2.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_and_singular_integrands() {
        let r = integrate(libm::sin, 0.0, core::f64::consts::PI, 1e-12).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        // ∫_0^1 x^{-1/2} dx = 2
        let r = integrate_half_line(
            |x: f64| if x < 1.0 { 1.0 / x.sqrt() } else { 0.0 },
            1.0,
            1e-11,
        );
        assert!((r.unwrap().value - 2.0).abs() < 1e-9);
        // ∫_0^∞ e^{-x} dx = 1
        let r = integrate_half_line(|x: f64| (-x).exp(), 3.0, 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn divergent_integral_is_reported() {
        let r = integrate_half_line(|x: f64| 1.0 / (x * x), 1.0, 1e-10);
        assert!(r.is_err());
    }
}
