//! Exact and discretized transitions of square-root processes.
//!
//! Over a clock increment h a square-root process with parameters
//! (κ, θ̄, σ) started at y0 is distributed as `c · χ²(d, λ)` with
//! `c = σ² (1 - e^{-κh}) / (4κ)`, `d = 4κθ̄/σ²` and `λ = y0 e^{-κh} / c`.
//! The noncentral chi-squared draw is a Poisson mixture of central ones,
//! which works for any real d > 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::float::Real;
use crate::market::SquareRootSpec;

pub type StreamRng = ChaCha8Rng;

/// Seed plus stream identifier. Identical pairs replay identical draws;
/// distinct streams of one seed are independent ChaCha streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Noncentral chi-squared law scaled by `scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionLaw {
    pub scale: f64,
    pub dimension: f64,
    pub noncentrality: f64,
}

impl TransitionLaw {
    pub fn new(spec: &SquareRootSpec, y0: f64, h: f64) -> Result<Self> {
        check_inputs(spec, y0, h)?;
        let decay = (-spec.speed * h).exp();
        let s2 = spec.diffusion_scale * spec.diffusion_scale;
        // 1 - e^{-κh} without cancellation for small steps
        let scale = -s2 * (-spec.speed * h).exp_m1() / (4.0 * spec.speed);
        Ok(Self {
            scale,
            dimension: spec.dimension(),
            noncentrality: y0 * decay / scale,
        })
    }

    pub fn mean(&self) -> f64 {
        self.scale * (self.dimension + self.noncentrality)
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.scale * self.scale * (self.dimension + 2.0 * self.noncentrality)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.scale * sample_noncentral_chi_squared(self.dimension, self.noncentrality, rng)
    }
}

fn check_inputs(spec: &SquareRootSpec, y0: f64, h: f64) -> Result<()> {
    for (name, v) in [
        ("mean", spec.mean),
        ("speed", spec.speed),
        ("diffusion_scale", spec.diffusion_scale),
        ("y0", y0),
        ("h", h),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFinite(name));
        }
    }
    if !(spec.mean > 0.0 && spec.speed > 0.0 && spec.diffusion_scale > 0.0) {
        return Err(Error::Domain {
            name: "square-root parameters",
            value: spec.mean.min(spec.speed).min(spec.diffusion_scale),
            constraint: "mean, speed and diffusion scale > 0",
        });
    }
    if y0 < 0.0 {
        return Err(Error::Domain { name: "y0", value: y0, constraint: "y0 >= 0" });
    }
    if h <= 0.0 {
        return Err(Error::Domain { name: "h", value: h, constraint: "h > 0" });
    }
    Ok(())
}

/// Central chi-squared with `dof > 0` degrees of freedom.
pub fn sample_chi_squared<R: Rng + ?Sized>(dof: f64, rng: &mut R) -> f64 {
    2.0 * sample_gamma(0.5 * dof, rng)
}

/// Gamma(shape, scale 1).
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 1.0).expect("gamma shape must be positive").sample(rng)
}

/// χ²(d, λ) as a Poisson(λ/2) mixture of χ²(d + 2N).
pub fn sample_noncentral_chi_squared<R: Rng + ?Sized>(dimension: f64, noncentrality: f64, rng: &mut R) -> f64 {
    let extra = if noncentrality > 0.0 {
        Poisson::new(0.5 * noncentrality)
            .expect("noncentrality must be finite")
            .sample(rng)
    } else {
        0.0
    };
    sample_chi_squared(dimension + 2.0 * extra, rng)
}

/// One exact draw of `Y_h` given `Y_0 = y0`.
pub fn sample_srou_exact<R: Rng + ?Sized>(spec: &SquareRootSpec, y0: f64, h: f64, rng: &mut R) -> Result<f64> {
    Ok(TransitionLaw::new(spec, y0, h)?.sample(rng))
}

/// Full-truncation Euler scheme with `substeps` steps over h: negative
/// intermediate states enter drift and diffusion as zero; the returned
/// state is floored at zero.
pub fn sample_srou_euler<R: Rng + ?Sized>(
    spec: &SquareRootSpec,
    y0: f64,
    h: f64,
    substeps: usize,
    rng: &mut R,
) -> Result<f64> {
    check_inputs(spec, y0, h)?;
    if substeps == 0 {
        return Err(Error::Domain { name: "substeps", value: 0.0, constraint: "substeps >= 1" });
    }
    let dt = h / substeps as f64;
    let sq_dt = dt.sqrt();
    let mut y = y0;
    for _ in 0..substeps {
        let yp = y.max(0.0);
        let z: f64 = StandardNormal.sample(rng);
        y += spec.speed * (spec.mean - yp) * dt + spec.diffusion_scale * yp.sqrt() * sq_dt * z;
    }
    Ok(y.max(0.0))
}

/// Stationary draw: Gamma(shape 2κθ̄/σ², rate 2κ/σ²).
pub fn sample_stationary<R: Rng + ?Sized>(spec: &SquareRootSpec, rng: &mut R) -> f64 {
    let s2 = spec.diffusion_scale * spec.diffusion_scale;
    let rate = 2.0 * spec.speed / s2;
    sample_gamma(spec.dimension() / 2.0, rng) / rate
}
