//! Maximum-likelihood location-scale Student-t fit.
//!
//! The likelihood is flat in ν, so ν is profiled: for fixed ν the location
//! and scale follow from the EM (iteratively reweighted) fixed point, ν is
//! scanned on a log grid and refined by golden-section search in ln ν.
//! Standard errors come from a finite-difference Hessian of the full
//! log-likelihood in (ν, location, ln scale).

use alloc::vec::Vec;

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::float::Real;
use crate::special::ln_gamma;

/// Smallest sample accepted by [`student_t_fit`].
pub const MIN_OBSERVATIONS: usize = 10_000;

const NU_MIN: f64 = 0.5;
const NU_MAX: f64 = 500.0;
const GRID_POINTS: usize = 48;
const EM_MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StudentTFit {
    pub nu: f64,
    pub location: f64,
    pub scale: f64,
    pub log_likelihood: f64,
    pub nu_se: f64,
    pub location_se: f64,
    pub scale_se: f64,
    pub observations: usize,
    /// Sampling interval of the returns.
    pub horizon: f64,
    /// False if the EM iterations hit their cap or ν sits on a search bound.
    pub converged: bool,
}

impl StudentTFit {
    /// Scale per unit time, `scale / √horizon`.
    pub fn annualized_scale(&self) -> f64 {
        self.scale / self.horizon.sqrt()
    }
}

fn log_likelihood(x: &[f64], nu: f64, loc: f64, scale: f64) -> f64 {
    let n = x.len() as f64;
    let c = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * core::f64::consts::PI).ln() - scale.ln();
    let s: f64 = x
        .iter()
        .map(|&v| {
            let z = (v - loc) / scale;
            (z * z / nu).ln_1p()
        })
        .sum();
    n * c - 0.5 * (nu + 1.0) * s
}

/// EM fixed point for location and scale at fixed ν.
fn em(x: &[f64], nu: f64, mut loc: f64, mut scale: f64) -> (f64, f64, bool) {
    let n = x.len() as f64;
    for _ in 0..EM_MAX_ITER {
        let (mut sw, mut swx) = (0.0, 0.0);
        let s2 = scale * scale;
        for &v in x {
            let d = v - loc;
            let w = (nu + 1.0) / (nu + d * d / s2);
            sw += w;
            swx += w * v;
        }
        let new_loc = swx / sw;
        let mut ss = 0.0;
        for &v in x {
            let d = v - new_loc;
            let w = (nu + 1.0) / (nu + d * d / s2);
            ss += w * d * d;
        }
        let new_scale = (ss / n).sqrt();
        let done = (new_loc - loc).abs() <= 1e-12 * scale && (new_scale / scale - 1.0).abs() <= 1e-11;
        loc = new_loc;
        scale = new_scale;
        if done {
            return (loc, scale, true);
        }
    }
    (loc, scale, false)
}

fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v[v.len() / 2]
}

/// Fits a location-scale Student-t law to `returns` sampled every
/// `horizon` time units.
pub fn student_t_fit(returns: &[f64], horizon: f64) -> Result<StudentTFit> {
    if returns.len() < MIN_OBSERVATIONS {
        return Err(Error::TooFewSamples { got: returns.len(), need: MIN_OBSERVATIONS });
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite("return"));
    }
    if !(horizon > 0.0) {
        return Err(Error::Domain { name: "horizon", value: horizon, constraint: "> 0" });
    }
    let x = returns;
    let m = median(x);
    let dev: Vec<f64> = x.iter().map(|v| (v - m).abs()).collect();
    let mad = median(&dev).max(f64::MIN_POSITIVE);

    let mut converged = true;
    let mut start = (m, 1.4826 * mad);
    let profile = |ln_nu: f64, start: (f64, f64)| {
        let nu = ln_nu.exp();
        let (loc, scale, ok) = em(x, nu, start.0, start.1);
        (log_likelihood(x, nu, loc, scale), loc, scale, ok)
    };

    let (lo, hi) = (NU_MIN.ln(), NU_MAX.ln());
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let mut best = (f64::NEG_INFINITY, 0usize, start);
    for j in 0..GRID_POINTS {
        // scan from large ν down so each EM run starts near its solution
        let g = GRID_POINTS - 1 - j;
        let (ll, loc, scale, ok) = profile(lo + g as f64 * step, start);
        converged &= ok;
        start = (loc, scale);
        if ll > best.0 {
            best = (ll, g, start);
        }
    }

    // golden-section refinement between the neighbours of the best point
    let (mut a, mut b) = (
        lo + best.1.saturating_sub(1) as f64 * step,
        lo + (best.1 + 1).min(GRID_POINTS - 1) as f64 * step,
    );
    let start = best.2;
    let r = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = profile(c, start).0;
    let mut fd = profile(d, start).0;
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = profile(c, start).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = profile(d, start).0;
        }
        if b - a < 1e-8 {
            break;
        }
    }
    let ln_nu = 0.5 * (a + b);
    let (ll, loc, scale, ok) = profile(ln_nu, start);
    converged &= ok;
    let nu = ln_nu.exp();
    if ln_nu <= lo + 1e-6 || ln_nu >= hi - 1e-6 {
        converged = false;
    }

    let (nu_se, location_se, scale_se) = standard_errors(x, nu, loc, scale);
    Ok(StudentTFit {
        nu,
        location: loc,
        scale,
        log_likelihood: ll,
        nu_se,
        location_se,
        scale_se,
        observations: x.len(),
        horizon,
        converged,
    })
}

/// Standard errors from the inverse observed information in
/// (ν, location, ln scale), mapped back to (ν, location, scale).
fn standard_errors(x: &[f64], nu: f64, loc: f64, scale: f64) -> (f64, f64, f64) {
    let p = [nu, loc, scale.ln()];
    let h = [1e-3 * nu, 1e-3 * scale, 1e-3];
    let f = |q: [f64; 3]| log_likelihood(x, q[0], q[1], q[2].exp());
    let mut hess = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let e = |si: f64, sj: f64| {
                let mut q = p;
                q[i] += si * h[i];
                q[j] += sj * h[j];
                f(q)
            };
            let v = (e(1.0, 1.0) - e(1.0, -1.0) - e(-1.0, 1.0) + e(-1.0, -1.0)) / (4.0 * h[i] * h[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    match invert3(&hess) {
        Some(inv) => {
            let var = |k: usize| {
                let v = -inv[k][k];
                if v > 0.0 {
                    v.sqrt()
                } else {
                    f64::NAN
                }
            };
            (var(0), var(1), scale * var(2))
        }
        None => (f64::NAN, f64::NAN, f64::NAN),
    }
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let c = |r: usize, s: usize| {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (s1, s2) = ((s + 1) % 3, (s + 2) % 3);
        m[r1][s1] * m[r2][s2] - m[r1][s2] * m[r2][s1]
    };
    let det = m[0][0] * c(0, 0) + m[0][1] * c(0, 1) + m[0][2] * c(0, 2);
    if !(det.abs() > 0.0) || !det.is_finite() {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for (r, row) in inv.iter_mut().enumerate() {
        for (s, v) in row.iter_mut().enumerate() {
            *v = c(s, r) / det;
        }
    }
    Some(inv)
}
