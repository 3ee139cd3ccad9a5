//! Market path generation.
//!
//! For each path the rate and activity processes are sampled on the
//! calendar grid, activity clocks τ^k, the basis exponential B and the
//! savings account A⁰ are integrated with the trapezoidal rule, and every
//! normalized atom Y^k is advanced over its clock increment Δτ^k. With
//! φ(y) = y that transition is exact (noncentral chi-squared); any other
//! volatility function falls back to a log-Euler scheme in activity time.
//! Atom values are reconstructed as `A^k = Y^k · B · e^{τ^k - τ^k_0}`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
#[allow(unused_imports)]
use crate::float::{exprel, Real};
use crate::market::{
    average_activity, validate_config, ActivityModel, InitialValues, MarketConfig, RateModel,
    SquareRootSpec, VolatilityFunction,
};
use crate::sampler::{sample_srou_exact, sample_stationary, RngStream};

/// Floor applied to Y when evaluating volatilities `β = √(a / φ(Y))`.
pub const EPS_VOL: f64 = 1e-12;

/// Largest activity-time step of the log-Euler fallback.
pub const EULER_MAX_STEP: f64 = 1e-3;

/// One simulated path. Per-atom arrays are indexed `[atom][grid point]`;
/// Brownian increments are indexed `[atom][step]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketPath {
    pub index: u64,
    /// Y^k.
    pub normalized: Vec<Vec<f64>>,
    /// τ^k with τ^k_0 = 0.
    pub clocks: Vec<Vec<f64>>,
    /// A^k.
    pub atoms: Vec<Vec<f64>>,
    /// β^k.
    pub volatilities: Vec<Vec<f64>>,
    /// Calendar-time Brownian increments ΔW^k implied by each transition.
    pub brownian: Vec<Vec<f64>>,
    /// a^k; a single row when the activity is shared.
    pub activities: Vec<Vec<f64>>,
    /// Average activity a_t.
    pub average_activity: Vec<f64>,
    /// Average activity time τ̂_t = ∫ a_s ds.
    pub average_clock: Vec<f64>,
    pub rate: Vec<f64>,
    /// λ*_t = r_t + λ̂ a_t.
    pub lambda_star: Vec<f64>,
    /// ln A⁰_t.
    pub ln_savings: Vec<f64>,
    /// ln B_t.
    pub ln_basis: Vec<f64>,
}

impl MarketPath {
    pub fn n(&self) -> usize {
        self.normalized.len()
    }

    pub fn len(&self) -> usize {
        self.rate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rate.is_empty()
    }

    pub fn activity(&self, k: usize) -> &[f64] {
        if self.activities.len() == 1 {
            &self.activities[0]
        } else {
            &self.activities[k]
        }
    }

    pub fn savings(&self, i: usize) -> f64 {
        self.ln_savings[i].exp()
    }

    pub fn basis(&self, i: usize) -> f64 {
        self.ln_basis[i].exp()
    }

    /// Y^k clamped at [`EPS_VOL`].
    pub fn clamped(&self, k: usize, i: usize) -> f64 {
        self.normalized[k][i].max(EPS_VOL)
    }

    /// Largest relative deviation from `A^k = Y^k B e^{τ^k - τ^k_0}`.
    pub fn reconstruction_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.n() {
            for i in 0..self.len() {
                let rebuilt = self.normalized[k][i] * (self.ln_basis[i] + self.clocks[k][i]).exp();
                let a = self.atoms[k][i];
                if a != 0.0 || rebuilt != 0.0 {
                    worst = worst.max((a - rebuilt).abs() / a.abs().max(rebuilt.abs()));
                }
            }
        }
        worst
    }
}

/// A configuration, its calendar grid and the paths generated from it.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub config: MarketConfig,
    pub grid: Vec<f64>,
    pub paths: Vec<MarketPath>,
}

impl PathSet {
    pub fn view(&self, p: usize) -> MarketView<'_> {
        MarketView { config: &self.config, grid: &self.grid, path: &self.paths[p] }
    }

    pub fn views(&self) -> impl Iterator<Item = MarketView<'_>> {
        self.paths.iter().map(move |path| MarketView { config: &self.config, grid: &self.grid, path })
    }
}

/// Borrowed view of one path together with its configuration and grid.
#[derive(Debug, Clone, Copy)]
pub struct MarketView<'a> {
    pub config: &'a MarketConfig,
    pub grid: &'a [f64],
    pub path: &'a MarketPath,
}

impl MarketView<'_> {
    pub fn n(&self) -> usize {
        self.config.n
    }

    pub fn steps(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn dt(&self, i: usize) -> f64 {
        self.grid[i + 1] - self.grid[i]
    }

    pub fn horizon(&self) -> f64 {
        self.grid[self.grid.len() - 1] - self.grid[0]
    }
}

/// Validates `cfg` and generates `cfg.paths` paths sequentially.
pub fn simulate_market(cfg: &MarketConfig) -> Result<PathSet> {
    validate_config(cfg).into_result()?;
    let grid = cfg.time_grid();
    let paths = (0..cfg.paths as u64)
        .map(|p| simulate_path(cfg, &grid, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(PathSet { config: cfg.clone(), grid, paths })
}

struct CirParams {
    speed: f64,
    level: f64,
    vol: f64,
}

impl CirParams {
    fn step<R: Rng + ?Sized>(&self, x: f64, h: f64, rng: &mut R) -> Result<f64> {
        if self.vol == 0.0 {
            return Ok(self.level + (x - self.level) * (-self.speed * h).exp());
        }
        // speed (level - x) dt + vol √x dW: κ = speed, θ̄ = level, σ = vol
        let spec = SquareRootSpec { mean: self.level, speed: self.speed, diffusion_scale: self.vol };
        sample_srou_exact(&spec, x, h, rng)
    }
}

fn activity_cir(model: &ActivityModel) -> Option<CirParams> {
    match *model {
        ActivityModel::Constant { .. } => None,
        ActivityModel::Cir { speed, level, vol, .. } => Some(CirParams { speed, level, vol }),
    }
}

/// Generates path number `index` on `grid`. The configuration is assumed
/// to be valid. The path depends only on `(cfg.seed, index)`.
pub fn simulate_path(cfg: &MarketConfig, grid: &[f64], index: u64) -> Result<MarketPath> {
    let mut rng = RngStream::new(cfg.seed, index).rng();
    let n = cfg.n;
    let len = grid.len();
    let omega = &cfg.risk_premium_factors;
    let phi = &cfg.volatility_function;
    let exact = phi.is_identity();
    let lambda_hat = cfg.net_risk_adjusted_return;

    let mut y0 = vec![0.0; n];
    match &cfg.initial_values {
        InitialValues::Fixed(values) => y0.copy_from_slice(values),
        InitialValues::SampleStationary => {
            for k in 0..n {
                y0[k] = if exact {
                    sample_stationary(&SquareRootSpec::normalized_atom(omega[k]), &mut rng)
                } else {
                    // no closed-form stationary law: burn in from ω
                    burn_in(phi, omega[k], &mut rng)
                };
            }
        }
    }

    let activity_rows = if cfg.shared_activity() { 1 } else { n };
    let activity_process = activity_cir(&cfg.activity.model);
    let rate_process = match cfg.interest_rate {
        RateModel::Constant { .. } => None,
        RateModel::MeanReverting { speed, level, vol, .. } => Some(CirParams { speed, level, vol }),
    };
    let r0 = match cfg.interest_rate {
        RateModel::Constant { r0 } | RateModel::MeanReverting { r0, .. } => r0,
    };

    let mut rate = vec![r0; len];
    let mut activities = vec![vec![cfg.activity.model.initial(); len]; activity_rows];
    let mut normalized = vec![vec![0.0; len]; n];
    let mut clocks = vec![vec![0.0; len]; n];
    let mut brownian = vec![vec![0.0; len - 1]; n];
    for k in 0..n {
        normalized[k][0] = y0[k];
    }

    for i in 0..len - 1 {
        let h = grid[i + 1] - grid[i];
        if let Some(p) = &rate_process {
            rate[i + 1] = p.step(rate[i], h, &mut rng)?;
        }
        if let Some(p) = &activity_process {
            for row in activities.iter_mut() {
                row[i + 1] = p.step(row[i], h, &mut rng)?;
            }
        }
        for k in 0..n {
            let a = if activity_rows == 1 { &activities[0] } else { &activities[k] };
            let dtau = 0.5 * (a[i] + a[i + 1]) * h;
            clocks[k][i + 1] = clocks[k][i] + dtau;
            let y = normalized[k][i];
            let (next, dw_tau) = if exact {
                let spec = SquareRootSpec::normalized_atom(omega[k]);
                let next = sample_srou_exact(&spec, y, dtau, &mut rng)?;
                // Euler inversion at the midpoint state
                let mid = (0.5 * (y + next)).max(EPS_VOL);
                (next, (next - y - (omega[k] - mid) * dtau) / mid.sqrt())
            } else {
                log_euler(phi, omega[k], y, dtau, &mut rng)
            };
            normalized[k][i + 1] = next;
            brownian[k][i] = if dtau > 0.0 { dw_tau * (h / dtau).sqrt() } else { 0.0 };
        }
    }

    let mut average = vec![0.0; len];
    for (i, avg) in average.iter_mut().enumerate() {
        *avg = if activity_rows == 1 {
            activities[0][i]
        } else {
            average_activity(omega, activities.iter().map(|row| row[i]))
        };
    }
    let lambda_star: Vec<f64> = rate.iter().zip(&average).map(|(r, a)| r + lambda_hat * a).collect();

    let mut ln_savings = vec![0.0; len];
    let mut ln_basis = vec![0.0; len];
    let mut average_clock = vec![0.0; len];
    for i in 0..len - 1 {
        let h = grid[i + 1] - grid[i];
        ln_savings[i + 1] = ln_savings[i] + 0.5 * (rate[i] + rate[i + 1]) * h;
        ln_basis[i + 1] = ln_basis[i] + 0.5 * (lambda_star[i] + lambda_star[i + 1]) * h;
        average_clock[i + 1] = average_clock[i] + 0.5 * (average[i] + average[i + 1]) * h;
    }

    let mut atoms = vec![vec![0.0; len]; n];
    let mut volatilities = vec![vec![0.0; len]; n];
    for k in 0..n {
        let a = if activity_rows == 1 { &activities[0] } else { &activities[k] };
        for i in 0..len {
            let y = normalized[k][i];
            atoms[k][i] = y * (ln_basis[i] + clocks[k][i]).exp();
            volatilities[k][i] = (a[i] / phi.eval(y.max(EPS_VOL))).sqrt();
        }
    }

    Ok(MarketPath {
        index,
        normalized,
        clocks,
        atoms,
        volatilities,
        brownian,
        activities,
        average_activity: average,
        average_clock,
        rate,
        lambda_star,
        ln_savings,
        ln_basis,
    })
}

/// Log-Euler step of `dY = Y (ω/φ(Y) - 1) dτ + Y φ(Y)^{-1/2} dW_τ` over `dtau`.
/// Returns the new state and the summed activity-time Brownian increment.
fn log_euler<R: Rng + ?Sized>(phi: &VolatilityFunction, omega: f64, y: f64, dtau: f64, rng: &mut R) -> (f64, f64) {
    if dtau <= 0.0 {
        return (y, 0.0);
    }
    let substeps = ((dtau / EULER_MAX_STEP).ceil() as usize).max(1);
    let d = dtau / substeps as f64;
    let sq = d.sqrt();
    let mut ln_y = y.max(f64::MIN_POSITIVE).ln();
    let mut w = 0.0;
    for _ in 0..substeps {
        let f = phi.eval(ln_y.exp().max(EPS_VOL));
        let z: f64 = StandardNormal.sample(rng);
        ln_y += (omega / f - 1.0 - 0.5 / f) * d + sq * z / f.sqrt();
        w += sq * z;
    }
    (ln_y.exp(), w)
}

fn burn_in<R: Rng + ?Sized>(phi: &VolatilityFunction, omega: f64, rng: &mut R) -> f64 {
    log_euler(phi, omega, omega, 10.0, rng).0
}

/// Exact value of `∫ e^{g(s)} ds` over a step of length h when g is
/// linear between `g0` and `g1`.
pub(crate) fn exp_linear_integral(g0: f64, g1: f64, h: f64) -> f64 {
    h * g0.exp() * exprel(g1 - g0)
}

/// Which intrinsic clock to evaluate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntrinsicTimeKind {
    Atom(usize),
    AtomSet(Vec<usize>),
    AtomGop,
}

/// Intrinsic time on the grid with φ(0) = 0.
///
/// Atoms and sums of atoms use `dφ/dt = B_t e^{∫a} a_t / 4`, integrated
/// exactly for log-linear B e^{∫a} between grid points; the atom GOP uses
/// `dφ*/dt = S*_t Z_t a_t / 4` with the trapezoidal rule.
pub fn intrinsic_time(view: &MarketView<'_>, kind: &IntrinsicTimeKind) -> Result<Vec<f64>> {
    let path = view.path;
    let len = path.len();
    let mut phi = vec![0.0; len];
    match kind {
        IntrinsicTimeKind::Atom(k) => {
            crate::portfolio::check_index(*k, view.n())?;
            let clock = &path.clocks[*k];
            let a = path.activity(*k);
            for i in 0..len - 1 {
                let h = view.dt(i);
                let g0 = path.ln_basis[i] + clock[i];
                let g1 = path.ln_basis[i + 1] + clock[i + 1];
                phi[i + 1] = phi[i] + 0.125 * (a[i] + a[i + 1]) * exp_linear_integral(g0, g1, h);
            }
        }
        IntrinsicTimeKind::AtomSet(set) => {
            crate::portfolio::check_set(set, view.n())?;
            let a = &path.average_activity;
            for i in 0..len - 1 {
                let h = view.dt(i);
                let g0 = path.ln_basis[i] + path.average_clock[i];
                let g1 = path.ln_basis[i + 1] + path.average_clock[i + 1];
                phi[i + 1] = phi[i] + 0.125 * (a[i] + a[i + 1]) * exp_linear_integral(g0, g1, h);
            }
        }
        IntrinsicTimeKind::AtomGop => {
            let gop = crate::portfolio::atom_gop_path(view)?;
            let a = &path.average_activity;
            let rate = |i: usize| 0.25 * gop.portfolio.value(i) * gop.z[i] * a[i];
            for i in 0..len - 1 {
                phi[i + 1] = phi[i] + 0.5 * (rate(i) + rate(i + 1)) * view.dt(i);
            }
        }
    }
    Ok(phi)
}

/// Clock in which the basis-exponential-denominated value `A^𝒜 / B` of a
/// sum of atoms is a squared Bessel process: `dφ̄/dt = e^{∫a} a_t / 4`.
pub fn besq_clock(view: &MarketView<'_>) -> Vec<f64> {
    let path = view.path;
    let a = &path.average_activity;
    let mut phi = vec![0.0; path.len()];
    for i in 0..path.len() - 1 {
        let h = view.dt(i);
        phi[i + 1] = phi[i]
            + 0.125 * (a[i] + a[i + 1]) * exp_linear_integral(path.average_clock[i], path.average_clock[i + 1], h);
    }
    phi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{ActivitySpec, Mode};

    fn cfg(n: usize) -> MarketConfig {
        MarketConfig::info_minimizing(n, 0.03, 0.2, 0.05).with_grid(5.0, 0.05).with_paths(3, 9)
    }

    #[test]
    fn reconstruction_identity_and_positivity() {
        let mut c = cfg(3);
        c.activity.model = ActivityModel::Cir { a0: 0.2, speed: 2.0, level: 0.2, vol: 0.3 };
        c.interest_rate = RateModel::MeanReverting { r0: 0.03, speed: 0.5, level: 0.03, vol: 0.05 };
        let set = simulate_market(&c).unwrap();
        for p in &set.paths {
            assert!(p.reconstruction_error() <= 1e-10);
            for k in 0..3 {
                assert!(p.normalized[k].iter().all(|&y| y >= 0.0));
                assert!(p.clocks[k].windows(2).all(|w| w[1] >= w[0]));
            }
            assert!(p.activities[0].iter().all(|&a| a > 0.0));
            assert!(p.rate.iter().all(|r| r.is_finite()));
            // λ* ≥ 0 here, so B is non-decreasing
            assert!(p.ln_basis.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn constant_rate_savings_account_is_exact() {
        let set = simulate_market(&cfg(1)).unwrap();
        let p = &set.paths[0];
        for (i, t) in set.grid.iter().enumerate() {
            assert!((p.savings(i) - libm::exp(0.03 * t)).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_net_return_makes_basis_equal_savings() {
        let c = MarketConfig::info_minimizing(2, 0.03, 0.2, 0.0).with_grid(5.0, 0.05);
        let set = simulate_market(&c).unwrap();
        let p = &set.paths[0];
        for i in 0..p.len() {
            assert!((p.basis(i) / p.savings(i) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn same_seed_same_path() {
        let c = cfg(2);
        let grid = c.time_grid();
        assert_eq!(simulate_path(&c, &grid, 1).unwrap(), simulate_path(&c, &grid, 1).unwrap());
        assert_ne!(simulate_path(&c, &grid, 1).unwrap(), simulate_path(&c, &grid, 2).unwrap());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut c = cfg(2);
        c.risk_premium_factors = vec![0.7, 0.3];
        assert!(simulate_market(&c).is_err());
    }

    #[test]
    fn intrinsic_time_closed_form() {
        // λ* = 0 (r = 0, λ̂ = 0), constant a: φ(t) = (e^{at} - 1)/4
        let c = MarketConfig::info_minimizing(2, 0.0, 0.3, 0.0).with_grid(4.0, 0.1);
        let set = simulate_market(&c).unwrap();
        let v = set.view(0);
        let phi = intrinsic_time(&v, &IntrinsicTimeKind::Atom(0)).unwrap();
        let set_phi = intrinsic_time(&v, &IntrinsicTimeKind::AtomSet(vec![0, 1])).unwrap();
        for (i, t) in set.grid.iter().enumerate() {
            let exact = (libm::exp(0.3 * t) - 1.0) / 4.0;
            assert!((phi[i] - exact).abs() < 1e-12);
            assert!((set_phi[i] - exact).abs() < 1e-12);
        }
        assert!(phi.windows(2).all(|w| w[1] > w[0]));
        let gop = intrinsic_time(&v, &IntrinsicTimeKind::AtomGop).unwrap();
        assert!(gop.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn vanishing_activity_freezes_intrinsic_time() {
        let c = MarketConfig::info_minimizing(1, 0.0, 1e-12, 0.0).with_grid(1.0, 0.1);
        let set = simulate_market(&c).unwrap();
        let phi = intrinsic_time(&set.view(0), &IntrinsicTimeKind::Atom(0)).unwrap();
        assert!(phi.last().unwrap().abs() < 1e-11);
    }

    #[test]
    fn general_phi_uses_log_euler() {
        let c = MarketConfig {
            mode: Mode::GeneralStationary,
            volatility_function: VolatilityFunction::polynomial(vec![0.5, 1.0]),
            risk_premium_factors: vec![0.6, 0.4],
            activity: ActivitySpec { model: ActivityModel::Constant { a0: 0.5 }, shared_across_atoms: false },
            ..MarketConfig::info_minimizing(2, 0.01, 0.5, 0.0).with_grid(1.0, 0.1)
        };
        let set = simulate_market(&c).unwrap();
        let p = &set.paths[0];
        assert!(p.normalized.iter().flatten().all(|&y| y > 0.0));
        assert!(p.reconstruction_error() < 1e-10);
        // β = √(a / φ(Y))
        let y = p.normalized[0][3];
        assert!((p.volatilities[0][3] - libm::sqrt(0.5 / (0.5 + y))).abs() < 1e-14);
    }
}
