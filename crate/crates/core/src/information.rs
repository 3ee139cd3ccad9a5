//! Stationary laws and information quantities.
//!
//! The normalized atom with risk premium factor ω and volatility function
//! φ has the stationary density
//! `p(y) = C φ(y)/y² · exp(2 ∫_1^y (ω - φ(u))/u du)`, which for φ(y) = y is
//! the gamma law with shape 2ω and rate 2.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::float::Real;
use crate::market::{MarketConfig, VolatilityFunction};
use crate::path::MarketView;
use crate::portfolio::{portfolio_path, WeightsRule};
use crate::quadrature::{integrate_half_line, Integral};
use crate::sampler::sample_gamma;
use crate::special::{digamma, gamma_p, ln_gamma};

/// Quadrature tolerance for densities on (0, ∞).
pub const QUAD_TOL: f64 = 1e-10;

const LN_2: f64 = core::f64::consts::LN_2;

/// Gamma law with the given shape and rate.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GammaLaw {
    pub shape: f64,
    pub rate: f64,
}

impl GammaLaw {
    /// Stationary law of a normalized atom: shape 2ω, rate 2.
    pub fn stationary(omega: f64) -> Self {
        Self { shape: 2.0 * omega, rate: 2.0 }
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }

    /// Degrees of freedom of the matching square-root process, 2·shape.
    pub fn degrees_of_freedom(&self) -> f64 {
        2.0 * self.shape
    }

    /// E[ln Y].
    pub fn log_mean(&self) -> f64 {
        digamma(self.shape) - self.rate.ln()
    }

    pub fn ln_pdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.shape * self.rate.ln() + (self.shape - 1.0) * y.ln() - self.rate * y - ln_gamma(self.shape)
    }

    pub fn pdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else {
            self.ln_pdf(y).exp()
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        gamma_p(self.shape, self.rate * y)
    }

    /// Self-information ∫ p ln p (negative differential entropy).
    pub fn self_information(&self) -> f64 {
        let a = self.shape;
        (a - 1.0) * digamma(a) - a - ln_gamma(a) + self.rate.ln()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_gamma(self.shape, rng) / self.rate
    }
}

/// Log-mean ζ = E[ln Y] = ln(1/2) + ψ(2ω) of the stationary gamma law.
pub fn log_mean(omega: f64) -> f64 {
    digamma(2.0 * omega) - LN_2
}

/// Self-information of the stationary gamma law with mean ω.
pub fn self_information(omega: f64) -> f64 {
    let a = 2.0 * omega;
    (a - 1.0) * (digamma(a) - LN_2) - a - ln_gamma(a) + a * LN_2
}

/// Self-information of independent atoms: the sum of the per-atom values.
pub fn total_self_information(omegas: &[f64]) -> f64 {
    omegas.iter().map(|&w| self_information(w)).sum()
}

/// `½ E[a] (λ̂² + ω̄ + 2λ̂)`.
pub fn kl_divergence_closed_form(lambda_hat: f64, omega_bar: f64, mean_activity: f64) -> Result<f64> {
    if !(mean_activity > 0.0) {
        return Err(Error::Domain { name: "mean_activity", value: mean_activity, constraint: "> 0" });
    }
    Ok(0.5 * mean_activity * (lambda_hat * lambda_hat + omega_bar + 2.0 * lambda_hat))
}

/// Stationary density for a polynomial volatility function.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDensity {
    pub omega: f64,
    pub phi: VolatilityFunction,
    /// ln C.
    pub ln_norm: f64,
}

impl StationaryDensity {
    fn ln_unnormalized(omega: f64, phi: &VolatilityFunction, y: f64) -> f64 {
        phi.eval(y).ln() - 2.0 * y.ln() + 2.0 * phi.drift_integral(omega, y)
    }

    pub fn ln_pdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.ln_norm + Self::ln_unnormalized(self.omega, &self.phi, y)
    }

    pub fn pdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else {
            self.ln_pdf(y).exp()
        }
    }

    /// `∫ f(y) p(y) dy` by quadrature.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        Ok(integrate_half_line(|y| f(y) * self.pdf(y), self.split(), QUAD_TOL)?.value)
    }

    pub fn mean(&self) -> Result<f64> {
        self.expect(|y| y)
    }

    pub fn log_mean(&self) -> Result<f64> {
        self.expect(|y| y.ln())
    }

    /// ∫ p ln p by quadrature.
    pub fn self_information(&self) -> Result<f64> {
        Ok(integrate_half_line(
            |y| {
                let lp = self.ln_pdf(y);
                if lp == f64::NEG_INFINITY {
                    0.0
                } else {
                    lp.exp() * lp
                }
            },
            self.split(),
            QUAD_TOL,
        )?
        .value)
    }

    fn split(&self) -> f64 {
        split_point(self.omega)
    }
}

fn split_point(omega: f64) -> f64 {
    (10.0 * omega).max(1.0)
}

/// Why a polynomial volatility function has no stationary density.
fn normalizability(omega: f64, phi: &VolatilityFunction) -> Result<()> {
    let c = &phi.coefficients;
    let Some(top) = c.iter().rposition(|&x| x != 0.0) else {
        return Err(Error::NotNormalizable("φ vanishes identically"));
    };
    if !phi.is_positive_on_half_line() {
        return Err(Error::NotNormalizable("φ is not positive on (0, ∞)"));
    }
    // near zero p(y) ~ y^{2ω - 2c_0 - 2} if c_0 > 0, else ~ y^{j - 2 + 2ω}
    // with j the lowest non-vanishing degree
    let c0 = c[0];
    let origin_ok = if c0 > 0.0 {
        omega - c0 > 0.5
    } else {
        let j = c.iter().position(|&x| x != 0.0).unwrap_or(top);
        j as f64 + 2.0 * omega > 1.0
    };
    if !origin_ok {
        return Err(Error::NotNormalizable("density is not integrable at zero"));
    }
    // for constant φ the tail is a power y^{2ω - 2c_0 - 2}
    if top == 0 && omega - c0 >= 0.5 {
        return Err(Error::NotNormalizable("density is not integrable at infinity"));
    }
    Ok(())
}

/// Stationary density of the normalized atom with risk premium factor ω
/// and volatility function φ, normalized by quadrature (analytically for
/// φ(y) = y).
pub fn stationary_density(omega: f64, phi: &VolatilityFunction) -> Result<StationaryDensity> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Domain { name: "omega", value: omega, constraint: "ω > 0" });
    }
    normalizability(omega, phi)?;
    let ln_norm = if phi.is_identity() {
        // unnormalized form is e² y^{2ω-1} e^{-2y}
        2.0 * omega * LN_2 - 2.0 - ln_gamma(2.0 * omega)
    } else {
        // shift by the largest log-density on a coarse grid to keep values O(1)
        let split = split_point(omega);
        let offset = (-60..=30)
            .map(|j| StationaryDensity::ln_unnormalized(omega, phi, libm::exp(0.25 * j as f64)))
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        let Integral { value, .. } = integrate_half_line(
            |y| (StationaryDensity::ln_unnormalized(omega, phi, y) - offset).exp(),
            split,
            QUAD_TOL,
        )
        .map_err(|_| Error::NotNormalizable("normalizing integral did not converge"))?;
        -(value.ln() + offset)
    };
    Ok(StationaryDensity { omega, phi: phi.clone(), ln_norm })
}

/// Gamma law with the given mean and log-mean.
pub fn moment_matched_gamma(mean: f64, log_mean: f64) -> Result<GammaLaw> {
    // solve ln s - ψ(s) = ln m - ℓ, decreasing in s
    let target = mean.ln() - log_mean;
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::Domain { name: "ln mean - log-mean", value: target, constraint: "> 0" });
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s = mid.exp();
        if s.ln() - digamma(s) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let shape = (0.5 * (lo + hi)).exp();
    Ok(GammaLaw { shape, rate: shape / mean })
}

/// Outcome of [`phi_identity_selector`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhiSelection {
    /// Index of the selected candidate.
    pub best: usize,
    pub phi: VolatilityFunction,
    /// L¹ distance of each candidate's stationary density to its
    /// moment-matched gamma law; infinite when not normalizable.
    pub distances: Vec<f64>,
}

/// L¹ distance between the stationary density for φ and the gamma law with
/// the same mean and log-mean; infinite if the density does not exist.
pub fn gamma_match_distance(omega: f64, phi: &VolatilityFunction) -> Result<f64> {
    let density = match stationary_density(omega, phi) {
        Ok(d) => d,
        Err(Error::NotNormalizable(_)) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    let gamma = moment_matched_gamma(density.mean()?, density.log_mean()?)?;
    let split = split_point(omega);
    Ok(integrate_half_line(|y| (density.pdf(y) - gamma.pdf(y)).abs(), split, 1e-11)?.value)
}

/// Picks the candidate volatility function whose stationary density is a
/// gamma law, i.e. whose moment-matched gamma distance is below
/// `tolerance` (smallest distance wins).
pub fn phi_identity_selector(candidates: &[VolatilityFunction], omega: f64, tolerance: f64) -> Result<PhiSelection> {
    let distances = candidates
        .iter()
        .map(|phi| gamma_match_distance(omega, phi))
        .collect::<Result<Vec<_>>>()?;
    let best = distances
        .iter()
        .enumerate()
        .filter(|(_, &d)| d < tolerance)
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or(Error::NoMatch)?;
    Ok(PhiSelection { best, phi: candidates[best].clone(), distances })
}

/// Running Monte Carlo estimate of `½ E[Σ_k (θ^k_t)²]`, one sample per
/// path (the path's time average). Mergeable in path order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KlAccumulator {
    pub path_means: Vec<f64>,
    pub n_atoms: usize,
}

/// Monte Carlo KL divergence with its standard error.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KlEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub paths: usize,
    /// Set for n ≥ 2, where E[1/Y] is infinite.
    pub heavy_tailed: bool,
    /// Mean of the per-path values below their 99% quantile (n ≥ 2 only).
    pub truncated_value: Option<f64>,
}

/// Time average over one path of `½ Σ_k (θ^k_t)²` with
/// `θ^k = (λ* - r)/β^k + ω^k β^k`, evaluated at the grid points with the
/// trapezoidal rule.
pub fn kl_path_mean(view: &MarketView<'_>) -> f64 {
    let path = view.path;
    let omega = &view.config.risk_premium_factors;
    let half_sq = |i: usize| -> f64 {
        let spread = path.lambda_star[i] - path.rate[i];
        0.5 * path
            .volatilities
            .iter()
            .zip(omega)
            .map(|(b, w)| {
                let t = spread / b[i] + w * b[i];
                t * t
            })
            .sum::<f64>()
    };
    let mut acc = 0.0;
    let mut prev = half_sq(0);
    for i in 0..view.steps() {
        let next = half_sq(i + 1);
        acc += 0.5 * (prev + next) * view.dt(i);
        prev = next;
    }
    acc / view.horizon()
}

impl KlAccumulator {
    pub fn new(n_atoms: usize) -> Self {
        Self { path_means: Vec::new(), n_atoms }
    }

    pub fn push(&mut self, view: &MarketView<'_>) {
        self.path_means.push(kl_path_mean(view));
    }

    pub fn merge(&mut self, other: KlAccumulator) {
        self.path_means.extend(other.path_means);
    }

    pub fn estimate(&self) -> Result<KlEstimate> {
        let m = self.path_means.len();
        if m < 2 {
            return Err(Error::TooFewSamples { got: m, need: 2 });
        }
        let (mean, se) = mean_and_se(&self.path_means);
        let heavy_tailed = self.n_atoms >= 2;
        let truncated_value = heavy_tailed.then(|| truncated_mean(&self.path_means, 0.99));
        Ok(KlEstimate { value: mean, standard_error: se, paths: m, heavy_tailed, truncated_value })
    }
}

pub(crate) fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Mean of the values at or below the empirical `level` quantile.
pub fn truncated_mean(xs: &[f64], level: f64) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let keep = ((level * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[..keep].iter().sum::<f64>() / keep as f64
}

/// Median of a sample.
pub fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Risk-neutral density process `Λ_t = (A⁰_t/S**_t) / (A⁰_0/S**_0)`.
pub fn radon_nikodym_path(view: &MarketView<'_>) -> Result<Vec<f64>> {
    let gop = portfolio_path(&WeightsRule::ExtendedGop, view)?;
    let path = view.path;
    let base = path.ln_savings[0] - gop.log_values[0];
    Ok((0..path.len())
        .map(|i| (path.ln_savings[i] - gop.log_values[i] - base).exp())
        .collect())
}

/// Estimators of ω̄(n) = E[Z] with `Z = Σ_k (1/n)²/Y^k` under the
/// stationary law.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OmegaBar {
    /// Exact value when finite (n = 1).
    pub exact: Option<f64>,
    pub median: f64,
    pub truncated_mean: f64,
    /// Quantile level of the truncation.
    pub truncation_level: f64,
    pub samples: usize,
}

/// ω̄(n): exactly 2 for n = 1; otherwise median and 99%-truncated mean of
/// `samples` stationary draws of Z.
pub fn omega_bar<R: Rng + ?Sized>(n: usize, samples: usize, rng: &mut R) -> Result<OmegaBar> {
    if n == 0 {
        return Err(Error::Domain { name: "n", value: 0.0, constraint: "n ≥ 1" });
    }
    if samples < 2 {
        return Err(Error::TooFewSamples { got: samples, need: 2 });
    }
    let w = 1.0 / n as f64;
    let law = GammaLaw::stationary(w);
    let z: Vec<f64> = (0..samples)
        .map(|_| (0..n).map(|_| w * w / law.sample(rng)).sum())
        .collect();
    let level = 0.99;
    Ok(OmegaBar {
        // E[1/Y] = rate/(shape - 1) for shape > 1
        exact: (n == 1).then_some(2.0),
        median: median(&z),
        truncated_mean: truncated_mean(&z, level),
        truncation_level: level,
        samples,
    })
}

/// Information quantities of an information-minimizing market.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InfoReport {
    pub n: usize,
    pub self_information: Vec<f64>,
    pub total_self_information: f64,
    pub log_means: Vec<f64>,
    pub omega_bar: OmegaBar,
    pub mean_activity: f64,
    pub lambda_hat: f64,
    /// Closed-form KL divergence; for n ≥ 2 it uses the truncated ω̄.
    pub kl_closed_form: f64,
    pub kl_monte_carlo: Option<KlEstimate>,
    /// "exact" for n = 1, "truncated" otherwise.
    pub kl_status: String,
}

impl InfoReport {
    /// Closed-form part of the report; Monte Carlo fields are left empty.
    pub fn closed_form<R: Rng + ?Sized>(cfg: &MarketConfig, omega_samples: usize, rng: &mut R) -> Result<Self> {
        let omega_bar = omega_bar(cfg.n, omega_samples, rng)?;
        let ob = omega_bar.exact.unwrap_or(omega_bar.truncated_mean);
        let mean_activity = cfg.activity.model.mean();
        let lambda_hat = cfg.net_risk_adjusted_return;
        let self_info: Vec<f64> = cfg.risk_premium_factors.iter().map(|&w| self_information(w)).collect();
        Ok(Self {
            n: cfg.n,
            total_self_information: self_info.iter().sum(),
            self_information: self_info,
            log_means: cfg.risk_premium_factors.iter().map(|&w| log_mean(w)).collect(),
            kl_closed_form: kl_divergence_closed_form(lambda_hat, ob, mean_activity)?,
            omega_bar,
            mean_activity,
            lambda_hat,
            kl_monte_carlo: None,
            kl_status: if cfg.n == 1 { "exact".into() } else { "truncated".into() },
        })
    }
}
