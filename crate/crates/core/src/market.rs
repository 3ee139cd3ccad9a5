//! Scenario configuration and the parametrization shared by every module.
//!
//! Time is measured in calendar years; rates and activities are annualized.
//! A configuration is checked once by [`validate_config`] and then treated
//! as immutable.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::float::Real;

/// Tolerance of the conservation law Σω = 1 and of ω = 1/n.
pub const OMEGA_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Mode {
    /// Equal risk premium factors 1/n, φ(y) = y and one shared activity.
    InfoMinimizing,
    /// Free ω, volatility function and per-atom activities.
    GeneralStationary,
}

/// Interest rate r_t.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum RateModel {
    Constant { r0: f64 },
    /// Square-root (CIR) short rate `dr = speed (level - r) dt + vol √r dW`.
    MeanReverting { r0: f64, speed: f64, level: f64, vol: f64 },
}

/// Activity a^k_t of one atom.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ActivityModel {
    Constant { a0: f64 },
    /// Square-root activity `da = speed (level - a) dt + vol √a dW`,
    /// required to satisfy the Feller condition so that it stays positive.
    Cir { a0: f64, speed: f64, level: f64, vol: f64 },
}

impl ActivityModel {
    pub fn initial(&self) -> f64 {
        match *self {
            ActivityModel::Constant { a0 } | ActivityModel::Cir { a0, .. } => a0,
        }
    }

    /// Stationary mean of the activity.
    pub fn mean(&self) -> f64 {
        match *self {
            ActivityModel::Constant { a0 } => a0,
            ActivityModel::Cir { level, .. } => level,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ActivitySpec {
    pub model: ActivityModel,
    /// One activity path drives every atom. Forced in info-minimizing mode.
    #[cfg_attr(feature = "serde", serde(default = "default_true"))]
    pub shared_across_atoms: bool,
}

#[cfg(feature = "serde")]
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InitialValues {
    /// Initial atom values A^k_0 (equal to Y^k_0 since B_0 = 1).
    Fixed(Vec<f64>),
    /// Draw Y^k_0 from the stationary gamma law of each atom.
    SampleStationary,
}

/// Polynomial volatility function φ(y) = Σ_j c_j y^j.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VolatilityFunction {
    pub coefficients: Vec<f64>,
}

impl Default for VolatilityFunction {
    fn default() -> Self {
        Self::identity()
    }
}

impl VolatilityFunction {
    pub fn identity() -> Self {
        Self { coefficients: alloc::vec![0.0, 1.0] }
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        let mut coefficients = coefficients;
        while coefficients.len() > 1 && coefficients.last() == Some(&0.0) {
            coefficients.pop();
        }
        Self { coefficients }
    }

    pub fn is_identity(&self) -> bool {
        let c = &self.coefficients;
        let trimmed = c.iter().rposition(|&x| x != 0.0).map_or(0, |i| i + 1);
        trimmed == 2 && c[0] == 0.0 && c[1] == 1.0
    }

    /// Horner evaluation.
    pub fn eval(&self, y: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * y + c)
    }

    /// `∫_1^y (ω - φ(u)) / u du`, in closed form for the polynomial.
    pub fn drift_integral(&self, omega: f64, y: f64) -> f64 {
        let c0 = self.coefficients.first().copied().unwrap_or(0.0);
        let mut acc = (omega - c0) * y.ln();
        for (j, &c) in self.coefficients.iter().enumerate().skip(1) {
            if c != 0.0 {
                acc -= c * (y.powi(j as i32) - 1.0) / j as f64;
            }
        }
        acc
    }

    /// Coefficients all non-negative and not all zero: a sufficient
    /// condition for φ > 0 on (0, ∞).
    pub fn is_positive_on_half_line(&self) -> bool {
        self.coefficients.iter().all(|&c| c >= 0.0 && c.is_finite())
            && self.coefficients.iter().any(|&c| c > 0.0)
    }
}

impl fmt::Display for VolatilityFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, &c) in self.coefficients.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match j {
                0 => write!(f, "{c}")?,
                1 if c == 1.0 => f.write_str("y")?,
                1 => write!(f, "{c}·y")?,
                _ if c == 1.0 => write!(f, "y^{j}")?,
                _ => write!(f, "{c}·y^{j}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MarketConfig {
    /// Number of atoms.
    pub n: usize,
    /// ω^k, one per atom, summing to one.
    pub risk_premium_factors: Vec<f64>,
    pub mode: Mode,
    #[cfg_attr(feature = "serde", serde(default))]
    pub volatility_function: VolatilityFunction,
    pub interest_rate: RateModel,
    pub activity: ActivitySpec,
    /// λ̂, per unit of activity time.
    pub net_risk_adjusted_return: f64,
    pub initial_values: InitialValues,
    /// T in years.
    pub horizon: f64,
    /// Δt in years.
    pub grid_step: f64,
    pub paths: usize,
    pub seed: u64,
}

impl MarketConfig {
    /// Info-minimizing market with n atoms, constant rate and activity,
    /// stationary initial values.
    pub fn info_minimizing(n: usize, rate: f64, activity: f64, lambda_hat: f64) -> Self {
        Self {
            n,
            risk_premium_factors: alloc::vec![1.0 / n as f64; n],
            mode: Mode::InfoMinimizing,
            volatility_function: VolatilityFunction::identity(),
            interest_rate: RateModel::Constant { r0: rate },
            activity: ActivitySpec {
                model: ActivityModel::Constant { a0: activity },
                shared_across_atoms: true,
            },
            net_risk_adjusted_return: lambda_hat,
            initial_values: InitialValues::SampleStationary,
            horizon: 1.0,
            grid_step: 0.01,
            paths: 1,
            seed: 0,
        }
    }

    pub fn with_grid(mut self, horizon: f64, grid_step: f64) -> Self {
        self.horizon = horizon;
        self.grid_step = grid_step;
        self
    }

    pub fn with_paths(mut self, paths: usize, seed: u64) -> Self {
        self.paths = paths;
        self.seed = seed;
        self
    }

    pub fn omega(&self, k: usize) -> f64 {
        self.risk_premium_factors[k]
    }

    pub fn is_info_minimizing(&self) -> bool {
        self.mode == Mode::InfoMinimizing
    }

    /// Whether all atoms share one activity path.
    pub fn shared_activity(&self) -> bool {
        self.is_info_minimizing() || self.activity.shared_across_atoms || self.n == 1
    }

    /// Calendar grid `0 = t_0 < … < t_m = T` with spacing Δt (last step may
    /// be shorter).
    pub fn time_grid(&self) -> Vec<f64> {
        let ratio = self.horizon / self.grid_step;
        let steps = ((ratio - 1e-9).ceil() as usize).max(1);
        let mut grid: Vec<f64> = (0..=steps).map(|i| i as f64 * self.grid_step).collect();
        grid[steps] = self.horizon;
        grid
    }

    /// Square-root parameters of the k-th normalized atom in its activity time.
    pub fn normalized_atom_spec(&self, k: usize) -> SquareRootSpec {
        SquareRootSpec::normalized_atom(self.omega(k))
    }
}

/// A square-root (SROU / CIR) process in its own clock,
/// `dY = κ (θ̄ - Y) dτ + σ √Y dW_τ`, of dimension d = 4κθ̄/σ².
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SquareRootSpec {
    pub mean: f64,
    pub speed: f64,
    pub diffusion_scale: f64,
}

impl SquareRootSpec {
    pub fn new(mean: f64, speed: f64, diffusion_scale: f64) -> Result<Self> {
        for (name, v) in [("mean", mean), ("speed", speed), ("diffusion_scale", diffusion_scale)] {
            if !v.is_finite() {
                return Err(Error::NonFinite(name));
            }
            if v <= 0.0 {
                return Err(Error::Domain { name, value: v, constraint: "> 0" });
            }
        }
        Ok(Self { mean, speed, diffusion_scale })
    }

    /// Parameters with the given dimension, speed and diffusion scale.
    pub fn with_dimension(dimension: f64, speed: f64, diffusion_scale: f64) -> Result<Self> {
        Self::new(dimension * diffusion_scale * diffusion_scale / (4.0 * speed), speed, diffusion_scale)
    }

    /// Normalized atom in activity time: κ = 1, σ = 1, θ̄ = ω, so d = 4ω.
    pub fn normalized_atom(omega: f64) -> Self {
        Self { mean: omega, speed: 1.0, diffusion_scale: 1.0 }
    }

    pub fn dimension(&self) -> f64 {
        4.0 * self.speed * self.mean / (self.diffusion_scale * self.diffusion_scale)
    }

    /// Conditional mean after a clock increment h.
    pub fn conditional_mean(&self, y0: f64, h: f64) -> f64 {
        self.mean + (y0 - self.mean) * (-self.speed * h).exp()
    }

    /// Conditional variance after a clock increment h.
    pub fn conditional_variance(&self, y0: f64, h: f64) -> f64 {
        let e = (-self.speed * h).exp();
        let s2 = self.diffusion_scale * self.diffusion_scale;
        y0 * s2 * (e - e * e) / self.speed
            + self.mean * s2 * (1.0 - e) * (1.0 - e) / (2.0 * self.speed)
    }
}

/// A violated configuration invariant.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Violation {
    #[error("n must be at least 1")]
    NoAtoms,
    #[error("expected {expected} risk premium factors, got {got}")]
    OmegaLength { expected: usize, got: usize },
    #[error("ω^{index} = {value} must be positive and finite")]
    OmegaNotPositive { index: usize, value: f64 },
    #[error("Σω ≠ 1 (sum = {sum})")]
    OmegaSum { sum: f64 },
    #[error("ω must equal 1/n in info-minimizing mode (ω^{index} = {value})")]
    OmegaNotUniform { index: usize, value: f64 },
    #[error("volatility function must be φ(y) = y in info-minimizing mode (got {0})")]
    PhiNotIdentity(String),
    #[error("volatility function {0} is not positive on (0, ∞)")]
    PhiNotPositive(String),
    #[error("activity must be shared across atoms in info-minimizing mode")]
    ActivityNotShared,
    #[error("{0}")]
    Activity(String),
    #[error("{0}")]
    Rate(String),
    #[error("net risk adjusted return must be finite")]
    LambdaHat,
    #[error("initial values: {0}")]
    InitialValues(String),
    #[error("grid: {0}")]
    Grid(String),
    #[error("paths must be at least 1")]
    NoPaths,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<Vec<String>> {
        if self.is_ok() {
            Ok(self.warnings)
        } else {
            Err(Error::InvalidConfig(self.violations.iter().map(|v| v.to_string()).collect()))
        }
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

/// Checks every configuration invariant and collects the failures.
pub fn validate_config(cfg: &MarketConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let v = &mut report.violations;
    if cfg.n == 0 {
        v.push(Violation::NoAtoms);
    }
    let omega = &cfg.risk_premium_factors;
    if omega.len() != cfg.n {
        v.push(Violation::OmegaLength { expected: cfg.n, got: omega.len() });
    } else if cfg.n > 0 {
        for (index, &value) in omega.iter().enumerate() {
            if !positive(value) {
                v.push(Violation::OmegaNotPositive { index: index + 1, value });
            }
        }
        let sum: f64 = omega.iter().sum();
        if (sum - 1.0).abs() > OMEGA_TOLERANCE {
            v.push(Violation::OmegaSum { sum });
        }
        if cfg.is_info_minimizing() {
            let uniform = 1.0 / cfg.n as f64;
            if let Some((index, &value)) = omega
                .iter()
                .enumerate()
                .find(|(_, &w)| (w - uniform).abs() > OMEGA_TOLERANCE)
            {
                v.push(Violation::OmegaNotUniform { index: index + 1, value });
            }
        }
    }

    if cfg.is_info_minimizing() {
        if !cfg.volatility_function.is_identity() {
            v.push(Violation::PhiNotIdentity(format!("{}", cfg.volatility_function)));
        }
        if !cfg.activity.shared_across_atoms {
            v.push(Violation::ActivityNotShared);
        }
    } else if !cfg.volatility_function.is_positive_on_half_line() {
        v.push(Violation::PhiNotPositive(format!("{}", cfg.volatility_function)));
    }

    match cfg.activity.model {
        ActivityModel::Constant { a0 } => {
            if !positive(a0) {
                v.push(Violation::Activity(format!("constant activity a0 = {a0} must be > 0")));
            }
        }
        ActivityModel::Cir { a0, speed, level, vol } => {
            if !(positive(a0) && positive(speed) && positive(level) && vol.is_finite() && vol >= 0.0) {
                v.push(Violation::Activity(format!(
                    "activity parameters (a0 = {a0}, speed = {speed}, level = {level}, vol = {vol}) must be positive"
                )));
            } else if 2.0 * speed * level < vol * vol {
                v.push(Violation::Activity(format!(
                    "activity violates the Feller condition 2·speed·level ≥ vol² ({} < {})",
                    2.0 * speed * level,
                    vol * vol
                )));
            } else if speed * cfg.grid_step > 0.5 || vol * cfg.grid_step.sqrt() > 0.5 * level {
                report.warnings.push(format!(
                    "grid step {} is coarse relative to the activity dynamics; the trapezoidal time change may be inaccurate",
                    cfg.grid_step
                ));
            }
        }
    }

    match cfg.interest_rate {
        RateModel::Constant { r0 } => {
            if !r0.is_finite() {
                v.push(Violation::Rate("constant rate must be finite".into()));
            }
        }
        RateModel::MeanReverting { r0, speed, level, vol } => {
            if !(r0.is_finite() && r0 >= 0.0 && positive(speed) && positive(level) && vol.is_finite() && vol >= 0.0) {
                v.push(Violation::Rate(format!(
                    "mean-reverting rate parameters (r0 = {r0}, speed = {speed}, level = {level}, vol = {vol}) must be non-negative with positive speed and level"
                )));
            }
        }
    }

    if !cfg.net_risk_adjusted_return.is_finite() {
        v.push(Violation::LambdaHat);
    }

    if let InitialValues::Fixed(values) = &cfg.initial_values {
        if values.len() != cfg.n {
            v.push(Violation::InitialValues(format!("expected {} values, got {}", cfg.n, values.len())));
        } else if let Some(bad) = values.iter().find(|&&x| !positive(x)) {
            v.push(Violation::InitialValues(format!("{bad} is not positive")));
        }
    }

    if !positive(cfg.grid_step) {
        v.push(Violation::Grid(format!("Δt = {} must be > 0", cfg.grid_step)));
    } else if !(cfg.horizon.is_finite() && cfg.horizon >= cfg.grid_step) {
        v.push(Violation::Grid(format!("T = {} must be ≥ Δt = {}", cfg.horizon, cfg.grid_step)));
    }
    if cfg.paths == 0 {
        v.push(Violation::NoPaths);
    }
    report
}

/// Generalized risk-adjusted return λ* = r + λ̂ a.
pub fn effective_lambda_star(r: f64, a: f64, lambda_hat: f64) -> Result<f64> {
    for (name, x) in [("r", r), ("a", a), ("lambda_hat", lambda_hat)] {
        if !x.is_finite() {
            return Err(Error::NonFinite(name));
        }
    }
    if a <= 0.0 {
        return Err(Error::Domain { name: "a", value: a, constraint: "a > 0" });
    }
    Ok(r + lambda_hat * a)
}

/// Average activity `a_t = (Σ_k ω^k / √a^k_t)^{-2}`.
pub fn average_activity(omega: &[f64], activities: impl IntoIterator<Item = f64>) -> f64 {
    let s: f64 = omega.iter().zip(activities).map(|(w, a)| w / a.sqrt()).sum();
    1.0 / (s * s)
}
