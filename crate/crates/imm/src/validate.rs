//! Property suites of the market model.
//!
//! Each suite runs fixed scenarios from a base seed and returns a list of
//! checks, each naming its scenario and seed so that a failure can be
//! replayed. Reports contain no timings, so the same seed always yields the
//! same report.

use std::fmt;

use imm_core::information::{
    gamma_match_distance, kl_divergence_closed_form, kl_path_mean, phi_identity_selector, self_information,
    stationary_density,
};
use imm_core::market::{validate_config, ActivityModel, InitialValues, Mode, RateModel, VolatilityFunction};
use imm_core::path::besq_clock;
use imm_core::portfolio::{atom_gop_path, atom_gop_weights, mvp_equals_ap_check, portfolio_path, weights_at};
use imm_core::sampler::{sample_noncentral_chi_squared, sample_srou_exact};
use imm_core::stats::{ks_one_sample, ks_two_sample, student_t_fit, GrowthAccumulator, GrowthReport, KsResult, PathGrowth};
use imm_core::{GammaLaw, MarketConfig, RngStream, SquareRootSpec, WeightsRule};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::{AppError, AppResult};
use crate::io::{ap_log_returns, trajectory_tables};

/// Seed used when none is given.
pub const REFERENCE_SEED: u64 = 20_240_601;

/// KS significance level.
pub const KS_LEVEL: f64 = 0.01;

/// Spacing of decorrelated samples in activity time.
pub const DECORRELATION: f64 = 5.0;

/// Relative tolerance of moment checks.
pub const MOMENT_TOLERANCE: f64 = 0.02;

/// Stream offset separating oracle draws from market paths.
const ORACLE_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Conservation,
    Stationary,
    SelfInformation,
    Kl,
    Additivity,
    Dimension,
    Mvp,
    Scaling,
    Phi,
    Growth,
    StudentT,
    Determinism,
}

impl Suite {
    pub const ALL: [Suite; 12] = [
        Suite::Conservation,
        Suite::Stationary,
        Suite::SelfInformation,
        Suite::Kl,
        Suite::Additivity,
        Suite::Dimension,
        Suite::Mvp,
        Suite::Scaling,
        Suite::Phi,
        Suite::Growth,
        Suite::StudentT,
        Suite::Determinism,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Conservation => "conservation",
            Suite::Stationary => "stationary",
            Suite::SelfInformation => "self-information",
            Suite::Kl => "kl",
            Suite::Additivity => "additivity",
            Suite::Dimension => "dimension",
            Suite::Mvp => "mvp",
            Suite::Scaling => "scaling",
            Suite::Phi => "phi",
            Suite::Growth => "growth",
            Suite::StudentT => "student-t",
            Suite::Determinism => "determinism",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Suite::Conservation => "risk premium factors sum to one; atom GOP weights equal them",
            Suite::Stationary => "normalized atoms follow Gamma(2ω, 2)",
            Suite::SelfInformation => "closed-form self-information equals quadrature",
            Suite::Kl => "Monte Carlo KL divergence equals its closed form",
            Suite::Additivity => "sums of normalized atoms are square-root processes of summed dimension",
            Suite::Dimension => "normalized AP and atom GOP are of dimension four",
            Suite::Mvp => "MVP equals AP with smaller volatility than the atom GOP",
            Suite::Scaling => "denominated atom sums have the squared Bessel scaling property",
            Suite::Phi => "only φ(y) = y yields a gamma stationary law",
            Suite::Growth => "implied net risk adjusted return and the vanishing-activity limit",
            Suite::StudentT => "AP log-returns are Student-t with about four degrees of freedom",
            Suite::Determinism => "outputs do not depend on the worker count",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses a comma-separated suite list; `all` selects every suite.
pub fn parse_suites(list: &str) -> AppResult<Vec<Suite>> {
    let mut out: Vec<Suite> = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let chosen: Vec<Suite> = if name == "all" {
            Suite::ALL.to_vec()
        } else {
            vec![Suite::from_name(name).ok_or_else(|| AppError::UnknownSuite {
                name: name.into(),
                known: Suite::ALL.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ") + ", all",
            })?]
        };
        for s in chosen {
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    if out.is_empty() {
        return Err(AppError::Usage("no suite selected".into()));
    }
    Ok(out)
}

/// One numeric pass/fail check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub scenario: String,
    pub seed: u64,
    pub statistic: String,
    pub value: f64,
    pub requirement: String,
    pub passed: bool,
}

impl Check {
    fn new(scenario: &str, seed: u64, statistic: &str, value: f64, requirement: String, passed: bool) -> Self {
        Self { scenario: scenario.into(), seed, statistic: statistic.into(), value, requirement, passed }
    }

    pub fn at_most(scenario: &str, seed: u64, statistic: &str, value: f64, limit: f64) -> Self {
        Self::new(scenario, seed, statistic, value, format!("<= {limit:e}"), value <= limit)
    }

    pub fn at_least(scenario: &str, seed: u64, statistic: &str, value: f64, limit: f64) -> Self {
        Self::new(scenario, seed, statistic, value, format!(">= {limit}"), value >= limit)
    }

    pub fn within(scenario: &str, seed: u64, statistic: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self::new(scenario, seed, statistic, value, format!("in [{lo}, {hi}]"), (lo..=hi).contains(&value))
    }

    pub fn holds(scenario: &str, seed: u64, statistic: &str, passed: bool) -> Self {
        Self::new(scenario, seed, statistic, if passed { 1.0 } else { 0.0 }, "true".into(), passed)
    }

    /// KS non-rejection at [`KS_LEVEL`].
    pub fn ks(scenario: &str, seed: u64, ks: &KsResult) -> Self {
        let stat = format!("KS p-value (D = {:.4}, n = {:.0})", ks.statistic, ks.sample_size);
        Self::at_least(scenario, seed, &stat, ks.p_value, KS_LEVEL)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {} (seed {}): {} = {:.6e}, required {}",
            if self.passed { "ok" } else { "FAILED" },
            self.scenario,
            self.seed,
            self.statistic,
            self.value,
            self.requirement
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: Suite,
    pub description: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Set when the suite could not run to completion.
    pub error: Option<String>,
}

impl SuiteResult {
    fn from_checks(suite: Suite, outcome: AppResult<Vec<Check>>) -> Self {
        let (checks, error) = match outcome {
            Ok(c) => (c, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        Self {
            suite,
            description: suite.description().into(),
            passed: error.is_none() && !checks.is_empty() && checks.iter().all(|c| c.passed),
            checks,
            error,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Machine-readable validation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessReport {
    pub seed: u64,
    pub version: String,
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
}

/// Runs suites on an engine from a base seed.
pub struct Harness<'e> {
    pub engine: &'e Engine,
    pub seed: u64,
}

impl<'e> Harness<'e> {
    pub fn new(engine: &'e Engine, seed: u64) -> Self {
        Self { engine, seed }
    }

    fn seed(&self, offset: u64) -> u64 {
        self.seed.wrapping_add(offset)
    }

    pub fn run(&self, suites: &[Suite]) -> HarnessReport {
        let suites: Vec<SuiteResult> = suites.iter().map(|&s| self.run_suite(s)).collect();
        HarnessReport {
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            passed: suites.iter().all(|s| s.passed),
            suites,
        }
    }

    pub fn run_suite(&self, suite: Suite) -> SuiteResult {
        let outcome = match suite {
            Suite::Conservation => self.conservation(),
            Suite::Stationary => self.stationary(),
            Suite::SelfInformation => self.self_information(),
            Suite::Kl => self.kl(),
            Suite::Additivity => self.additivity(),
            Suite::Dimension => self.dimension(),
            Suite::Mvp => self.mvp(),
            Suite::Scaling => self.scaling(),
            Suite::Phi => self.phi(),
            Suite::Growth => self.growth(),
            Suite::StudentT => self.student_t(),
            Suite::Determinism => self.determinism(),
        };
        SuiteResult::from_checks(suite, outcome)
    }

    fn conservation(&self) -> AppResult<Vec<Check>> {
        let seed = self.seed(0);
        let mut checks = Vec::new();
        let mut worst_sum: f64 = 0.0;
        let mut weights_equal = true;
        for n in 1..=64 {
            let cfg = MarketConfig::info_minimizing(n, 0.03, 0.2, 0.05);
            if !validate_config(&cfg).is_ok() {
                checks.push(Check::holds(&format!("info-minimizing n={n}"), seed, "accepted", false));
                continue;
            }
            worst_sum = worst_sum.max((cfg.risk_premium_factors.iter().sum::<f64>() - 1.0).abs());
            weights_equal &= atom_gop_weights(&cfg).weights == cfg.risk_premium_factors;
        }
        let mut rng = RngStream::new(seed, 0).rng();
        let mut accepted = 0;
        for _ in 0..1000 {
            let n = rng.random_range(1..=12);
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut cfg = MarketConfig::info_minimizing(n, 0.03, 0.2, 0.05);
            cfg.mode = Mode::GeneralStationary;
            cfg.risk_premium_factors = raw.iter().map(|x| x / total).collect();
            if validate_config(&cfg).is_ok() {
                accepted += 1;
                worst_sum = worst_sum.max((cfg.risk_premium_factors.iter().sum::<f64>() - 1.0).abs());
                weights_equal &= atom_gop_weights(&cfg).weights == cfg.risk_premium_factors;
            }
        }
        checks.push(Check::at_most("accepted configurations", seed, "max |Σω - 1|", worst_sum, 1e-12));
        checks.push(Check::at_least("random normalized factors", seed, "accepted of 1000", accepted as f64, 1000.0));
        checks.push(Check::holds("accepted configurations", seed, "atom GOP weights = ω", weights_equal));

        let mut bad = MarketConfig::info_minimizing(2, 0.03, 0.2, 0.05);
        bad.mode = Mode::GeneralStationary;
        bad.risk_premium_factors = vec![0.5, 0.5 + 1e-9];
        checks.push(Check::holds("Σω = 1 + 1e-9", seed, "rejected", !validate_config(&bad).is_ok()));

        // weights applied along a simulated general market
        let mut cfg = MarketConfig::info_minimizing(3, 0.03, 0.2, 0.05).with_grid(1.0, 0.1).with_paths(2, seed);
        cfg.mode = Mode::GeneralStationary;
        cfg.risk_premium_factors = vec![0.2, 0.3, 0.5];
        let max_dev = self.engine.map_paths(&cfg, |v| {
            let mut dev: f64 = 0.0;
            for i in 0..v.path.len() {
                let w = weights_at(&WeightsRule::AtomGop, &v, i)?;
                for (a, b) in w.atoms().iter().zip(&v.config.risk_premium_factors) {
                    dev = dev.max((a - b).abs());
                }
            }
            Ok(dev)
        })?;
        let max_dev = max_dev.into_iter().fold(0.0, f64::max);
        checks.push(Check::at_most("simulated ω = (0.2, 0.3, 0.5)", seed, "max |π* - ω|", max_dev, 0.0));
        Ok(checks)
    }

    fn stationary(&self) -> AppResult<Vec<Check>> {
        let mut checks = Vec::new();
        // a = 1 and Δt = 5: consecutive grid values are 5 activity units apart
        for (j, (n, paths)) in [(1usize, 1000usize), (2, 500), (5, 200)].into_iter().enumerate() {
            let seed = self.seed(100 + j as u64);
            let cfg = MarketConfig::info_minimizing(n, 0.03, 1.0, 0.05)
                .with_grid(100.0 * DECORRELATION, DECORRELATION)
                .with_paths(paths, seed);
            let per_path = self.engine.map_paths(&cfg, |v| {
                Ok(v.path.normalized.iter().flat_map(|row| row[1..].iter().copied()).collect::<Vec<f64>>())
            })?;
            let samples: Vec<f64> = per_path.into_iter().flatten().collect();
            let law = GammaLaw::stationary(1.0 / n as f64);
            let scenario = format!("n={n}, {} samples", samples.len());
            let ks = ks_one_sample(&samples, |y| law.cdf(y), &format!("Gamma({}, 2)", law.shape))?;
            checks.push(Check::ks(&scenario, seed, &ks));
            let mean = samples.iter().sum::<f64>() / samples.len() as f64;
            checks.push(Check::at_most(&scenario, seed, "|mean·n - 1|", (mean * n as f64 - 1.0).abs(), MOMENT_TOLERANCE));
        }
        Ok(checks)
    }

    fn self_information(&self) -> AppResult<Vec<Check>> {
        let mut checks = Vec::new();
        for omega in [0.25, 0.5, 1.0, 2.0] {
            let quad = stationary_density(omega, &VolatilityFunction::identity())?.self_information()?;
            let closed = self_information(omega);
            checks.push(Check::at_most(&format!("ω={omega}"), 0, "|closed form - quadrature|", (closed - quad).abs(), 1e-8));
        }
        let err = (self_information(0.5) - (std::f64::consts::LN_2 - 1.0)).abs();
        checks.push(Check::at_most("ω=1/2", 0, "|closed form - (ln 2 - 1)|", err, 1e-14));
        Ok(checks)
    }

    fn kl(&self) -> AppResult<Vec<Check>> {
        let mut checks = Vec::new();
        let mut j = 0;
        for lambda_hat in [0.0, 0.05, 0.5] {
            for a in [0.2, 1.0] {
                let seed = self.seed(200 + j);
                j += 1;
                // a T = 50 activity units on 1000 steps
                let horizon = 50.0 / a;
                let cfg = MarketConfig::info_minimizing(1, 0.03, a, lambda_hat)
                    .with_grid(horizon, horizon / 1000.0)
                    .with_paths(10_000, seed);
                let means = self.engine.map_paths(&cfg, |v| Ok(kl_path_mean(&v)))?;
                let mc = means.iter().sum::<f64>() / means.len() as f64;
                let closed = kl_divergence_closed_form(lambda_hat, 2.0, a)?;
                let scenario = format!("n=1, λ̂={lambda_hat}, a={a}, closed form {closed:.6}, Monte Carlo {mc:.6}");
                checks.push(Check::at_most(&scenario, seed, "relative error", (mc / closed - 1.0).abs(), MOMENT_TOLERANCE));
            }
        }
        Ok(checks)
    }

    fn additivity(&self) -> AppResult<Vec<Check>> {
        let cir = ActivityModel::Cir { a0: 1.0, speed: 3.0, level: 1.0, vol: 1.0 };
        let scenarios: [(usize, Vec<usize>, Vec<usize>, Option<ActivityModel>); 3] = [
            (2, vec![0], vec![1], None),
            (4, vec![0], vec![1], None),
            (5, vec![0, 1], vec![2, 3, 4], Some(cir)),
        ];
        let mut checks = Vec::new();
        for (j, (n, a, b, activity)) in scenarios.into_iter().enumerate() {
            let seed = self.seed(300 + j as u64);
            let mut cfg = MarketConfig::info_minimizing(n, 0.03, 1.0, 0.05).with_grid(1.0, 0.01).with_paths(10_000, seed);
            cfg.initial_values = InitialValues::Fixed((0..n).map(|k| 0.5 * (k + 1) as f64 / n as f64).collect());
            if let Some(m) = activity {
                cfg.activity.model = m;
            }
            let ks = additivity_test(self.engine, &cfg, &a, &b)?;
            let scenario = format!("n={n}, 𝒜={a:?}, 𝒝={b:?}{}", if activity.is_some() { ", CIR activity" } else { "" });
            checks.push(Check::ks(&scenario, seed, &ks));
        }
        let cfg = MarketConfig::info_minimizing(2, 0.03, 1.0, 0.05).with_paths(200, self.seed(399));
        let overlap = additivity_test(self.engine, &cfg, &[0], &[0]);
        checks.push(Check::holds("𝒜 = 𝒝", self.seed(399), "rejected as overlapping", overlap.is_err()));
        Ok(checks)
    }

    fn dimension(&self) -> AppResult<Vec<Check>> {
        let mut checks = Vec::new();

        let seed = self.seed(400);
        let cfg = MarketConfig::info_minimizing(5, 0.03, 1.0, 0.05)
            .with_grid(100.0 * DECORRELATION, DECORRELATION)
            .with_paths(200, seed);
        let per_path = self.engine.map_paths(&cfg, |v| {
            Ok((1..v.path.len()).map(|i| v.path.normalized.iter().map(|row| row[i]).sum()).collect::<Vec<f64>>())
        })?;
        let ap: Vec<f64> = per_path.into_iter().flatten().collect();
        let law = GammaLaw::stationary(1.0);
        let ks = ks_one_sample(&ap, |y| law.cdf(y), "Gamma(2, 2)")?;
        checks.push(Check::ks("normalized AP, n=5", seed, &ks));

        for (j, n) in [1usize, 2, 5].into_iter().enumerate() {
            let seed = self.seed(401 + j as u64);
            let cfg = MarketConfig::info_minimizing(n, 0.03, 1.0, 0.05).with_grid(100.0, 1e-3).with_paths(200, seed);
            let scenario = format!("normalized atom GOP, n={n}, Δt=1e-3");
            match gop_dimension_test(self.engine, &cfg) {
                Ok(g) => {
                    checks.push(Check::ks(&scenario, seed, &g.ks));
                    checks.push(Check::at_most(&scenario, seed, "|time average of Y* - 1|", (g.time_average - 1.0).abs(), MOMENT_TOLERANCE));
                }
                Err(e) => checks.push(Check::holds(&format!("{scenario}: {e}"), seed, "completed", false)),
            }
        }
        Ok(checks)
    }

    fn mvp(&self) -> AppResult<Vec<Check>> {
        let mut checks = Vec::new();
        for (j, n) in [1usize, 2, 5, 20].into_iter().enumerate() {
            let seed = self.seed(500 + j as u64);
            let mut cfg = MarketConfig::info_minimizing(n, 0.03, 0.2, 0.05).with_grid(10.0, 0.01).with_paths(8, seed);
            cfg.activity.model = ActivityModel::Cir { a0: 0.2, speed: 5.0, level: 0.2, vol: 0.4 };
            cfg.interest_rate = RateModel::MeanReverting { r0: 0.03, speed: 0.5, level: 0.03, vol: 0.05 };
            let per_path = self.engine.map_paths(&cfg, |v| {
                let dev = mvp_equals_ap_check(&v)?.into_iter().fold(0.0, f64::max);
                let mvp = portfolio_path(&WeightsRule::Mvp, &v)?.sq_vol;
                let gop = portfolio_path(&WeightsRule::AtomGop, &v)?.sq_vol;
                let below = mvp.iter().zip(&gop).filter(|(m, g)| m <= g).count();
                let strict = mvp.iter().zip(&gop).filter(|(m, g)| m < g).count();
                let rel_gap = mvp.iter().zip(&gop).map(|(m, g)| (m / g - 1.0).abs()).fold(0.0, f64::max);
                Ok((dev, below, strict, rel_gap, mvp.len()))
            })?;
            let scenario = format!("n={n}, CIR activity and rate");
            let dev = per_path.iter().map(|p| p.0).fold(0.0, f64::max);
            let points: usize = per_path.iter().map(|p| p.4).sum();
            let below: usize = per_path.iter().map(|p| p.1).sum();
            let strict: usize = per_path.iter().map(|p| p.2).sum();
            checks.push(Check::at_most(&scenario, seed, "max |π^MVP - π^AP|", dev, 1e-10));
            if n == 1 {
                let gap = per_path.iter().map(|p| p.3).fold(0.0, f64::max);
                checks.push(Check::at_most(&scenario, seed, "max |σ²_MVP/σ²_S* - 1|", gap, 1e-12));
            } else {
                checks.push(Check::at_least(&scenario, seed, "share of points with σ²_MVP ≤ σ²_S*", below as f64 / points as f64, 1.0));
                checks.push(Check::at_least(&scenario, seed, "share of points with σ²_MVP < σ²_S*", strict as f64 / points as f64, 1.0));
            }
        }
        Ok(checks)
    }

    fn scaling(&self) -> AppResult<Vec<Check>> {
        let mut checks = Vec::new();
        let scenarios = [(1.0, 2usize, vec![0, 1]), (2.0, 2, vec![0, 1]), (0.5, 2, vec![0, 1]), (0.5, 2, vec![0]), (2.0, 4, vec![0, 1])];
        for (j, (c, n, set)) in scenarios.into_iter().enumerate() {
            let seed = self.seed(600 + j as u64);
            let mut cfg = MarketConfig::info_minimizing(n, 0.03, 1.0, 0.05).with_paths(10_000, seed);
            cfg.initial_values = InitialValues::Fixed(vec![0.5; n]);
            let dimension = 4.0 * set.len() as f64 / n as f64;
            let ks = scaling_test(self.engine, &cfg, &set, c)?;
            checks.push(Check::ks(&format!("c={c}, d={dimension}"), seed, &ks));
        }
        Ok(checks)
    }

    fn phi(&self) -> AppResult<Vec<Check>> {
        let candidates = [
            VolatilityFunction::polynomial(vec![1.0]),
            VolatilityFunction::identity(),
            VolatilityFunction::polynomial(vec![0.0, 0.0, 1.0]),
            VolatilityFunction::polynomial(vec![1.0, 1.0]),
        ];
        let mut checks = Vec::new();
        for omega in [1.0, 0.5, 0.25] {
            let sel = phi_identity_selector(&candidates, omega, 1e-6)?;
            for (phi, d) in candidates.iter().zip(&sel.distances) {
                let scenario = format!("ω={omega}, φ(y)={phi}");
                if phi.is_identity() {
                    checks.push(Check::at_most(&scenario, 0, "L¹ distance to matched gamma", *d, 1e-6));
                } else {
                    checks.push(Check::at_least(&scenario, 0, "L¹ distance to matched gamma", *d, 1e-6));
                }
            }
            checks.push(Check::holds(&format!("ω={omega}"), 0, "selected φ(y) = y", sel.phi.is_identity()));
        }
        // a shifted identity is close but not a match
        let d = gamma_match_distance(1.0, &VolatilityFunction::polynomial(vec![0.1, 1.0]))?;
        checks.push(Check::at_least("ω=1, φ(y)=0.1 + y", 0, "L¹ distance to matched gamma", d, 1e-6));
        Ok(checks)
    }

    fn growth_at(&self, seed: u64, n: usize, lambda_hat: f64, a: f64, horizon: f64, paths: usize) -> AppResult<GrowthReport> {
        let cfg = MarketConfig::info_minimizing(n, 0.03, a, lambda_hat).with_grid(horizon, 0.01).with_paths(paths, seed);
        let mut acc = GrowthAccumulator::default();
        for g in self.engine.map_paths(&cfg, |v| PathGrowth::from_view(&v))? {
            acc.push(g);
        }
        Ok(acc.report(lambda_hat, horizon)?)
    }

    fn growth(&self) -> AppResult<Vec<Check>> {
        let mut checks = Vec::new();
        let mut rms = Vec::new();
        for (j, horizon) in [50.0, 200.0, 500.0].into_iter().enumerate() {
            let seed = self.seed(700 + j as u64);
            let rep = self.growth_at(seed, 1, 0.05, 0.2, horizon, 100)?;
            rms.push(rep.implied_lambda_hat_rms_error);
            if horizon == 500.0 {
                let scenario = format!("n=1, a=0.2, λ̂=0.05, T=500, implied {:.5}", rep.implied_lambda_hat);
                checks.push(Check::at_most(&scenario, seed, "|implied λ̂ - λ̂|", (rep.implied_lambda_hat - 0.05).abs(), 0.01));
            }
        }
        let monotone = rms.windows(2).all(|w| w[1] < w[0]);
        let scenario = format!("per-path RMS error at T = 50, 200, 500: {:.4}, {:.4}, {:.4}", rms[0], rms[1], rms[2]);
        checks.push(Check::holds(&scenario, self.seed(700), "error shrinks with T", monotone));

        let seed = self.seed(710);
        let rep = self.growth_at(seed, 1, 0.0, 0.2, 500.0, 100)?;
        let scenario = format!("n=1, a=0.2, λ̂=0, T=500, G^MVP - G^A0 = {:.5}", rep.mvp - rep.savings);
        checks.push(Check::at_most(&scenario, seed, "|G^MVP - G^A0 - E[a]|", (rep.mvp - rep.savings - rep.mean_activity).abs(), 0.01 * 0.2));

        let seed = self.seed(715);
        let rep = self.growth_at(seed, 2, 0.05, 0.2, 200.0, 50)?;
        let scenario = format!("n=2, a=0.2, T=200, G^S* - G^AP = {:.5} ± {:.5}", rep.gop_excess_over_ap, rep.gop_excess_over_ap_se);
        let excess = rep.gop_excess_over_ap + 3.0 * rep.gop_excess_over_ap_se;
        checks.push(Check::at_least(&scenario, seed, "G^S* - G^AP + 3 SE", excess, 0.0));

        let seed = self.seed(720);
        // growth-rate noise scales as √(a / (Y T))
        let rep = self.growth_at(seed, 1, 0.05, 1e-4, 100.0, 64)?;
        checks.push(Check::at_most("a=1e-4, r=0.03, T=100", seed, "max |G - r|", rep.max_distance_from(0.03), 1e-3));
        Ok(checks)
    }

    fn student_t(&self) -> AppResult<Vec<Check>> {
        let mut checks = Vec::new();
        for j in 0..3 {
            let seed = self.seed(800 + j);
            let cfg = student_t_config(seed);
            let returns: Vec<f64> = self.engine.map_paths(&cfg, ap_log_returns)?.into_iter().flatten().collect();
            let fit = self.engine.install(|| student_t_fit(&returns, cfg.grid_step))?;
            let scenario = format!("n=20, CIR activity, daily AP log-returns, ν̂ = {:.3} ± {:.3}", fit.nu, fit.nu_se);
            checks.push(Check::within(&scenario, seed, "ν̂", fit.nu, 3.0, 6.0));
        }
        Ok(checks)
    }

    fn determinism(&self) -> AppResult<Vec<Check>> {
        let seed = self.seed(900);
        let mut cfg = MarketConfig::info_minimizing(3, 0.03, 0.2, 0.05).with_grid(2.0, 0.01).with_paths(16, seed);
        cfg.activity.model = ActivityModel::Cir { a0: 0.2, speed: 5.0, level: 0.2, vol: 0.4 };
        cfg.interest_rate = RateModel::MeanReverting { r0: 0.03, speed: 0.5, level: 0.03, vol: 0.05 };
        let mut outputs = Vec::new();
        for threads in [1, 4, 8] {
            let engine = Engine::new(threads)?;
            let set = engine.simulate(&cfg)?;
            let bytes: Vec<Vec<u8>> = trajectory_tables(&set).iter().map(|(_, t)| t.to_csv_bytes()).collect();
            let kl: Vec<u64> = engine.map_paths(&cfg, |v| Ok(kl_path_mean(&v).to_bits()))?;
            outputs.push((bytes, kl));
        }
        let same = outputs.windows(2).all(|w| w[0] == w[1]);
        Ok(vec![Check::holds("n=3, 16 paths, 1/4/8 workers", seed, "byte-identical tables and reductions", same)])
    }
}

/// Market behind the Student-t check: n = 20, CIR activity, daily grid,
/// stationary start, many short paths.
pub fn student_t_config(seed: u64) -> MarketConfig {
    let mut cfg = MarketConfig::info_minimizing(20, 0.03, 0.2, 0.05).with_grid(2.0, 1.0 / 252.0).with_paths(1000, seed);
    cfg.activity.model = ActivityModel::Cir { a0: 0.2, speed: 5.0, level: 0.2, vol: 0.4 };
    cfg
}

/// Two-sample KS between the terminal normalized sum over `a ∪ b` and
/// exact square-root draws of dimension `d_a + d_b` over each path's clock.
pub fn additivity_test(engine: &Engine, cfg: &MarketConfig, a: &[usize], b: &[usize]) -> AppResult<KsResult> {
    if !cfg.is_info_minimizing() {
        return Err(imm_core::Error::NotInfoMinimizing.into());
    }
    if let Some(&k) = a.iter().find(|k| b.contains(k)) {
        return Err(imm_core::Error::OverlappingIndexSets(k).into());
    }
    let set: Vec<usize> = a.iter().chain(b).copied().collect();
    let mean: f64 = set.iter().map(|&k| cfg.omega(k)).sum();
    let spec = SquareRootSpec::normalized_atom(mean);
    let pairs = engine.map_paths(cfg, |v| {
        let sum = imm_core::portfolio::sum_of_atoms(&v, &set)?;
        let last = v.path.len() - 1;
        let clock = v.path.average_clock[last];
        let mut rng = RngStream::new(cfg.seed, ORACLE_STREAM + v.path.index).rng();
        let direct = sample_srou_exact(&spec, sum.normalized[0], clock, &mut rng)?;
        Ok((sum.normalized[last], direct))
    })?;
    let (market, direct): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(ks_two_sample(&market, &direct)?)
}

/// Scaling property of `Ā = A^𝒜 / B`, a squared Bessel process of
/// dimension `d_𝒜` in the clock φ̄ of [`besq_clock`].
///
/// The market is run to intrinsic time `c · φ₁` with `φ₁ = 1`, and
/// `Ā / c` is compared with fresh squared Bessel draws started at `Ā₀ / c`
/// and run for intrinsic time `φ̄_T / c`. Requires a constant activity
/// and fixed initial values; the calendar horizon is set from c.
pub fn scaling_test(engine: &Engine, cfg: &MarketConfig, set: &[usize], c: f64) -> AppResult<KsResult> {
    if !(c.is_finite() && c > 0.0) {
        return Err(imm_core::Error::Domain { name: "c", value: c, constraint: "c > 0" }.into());
    }
    let a = match cfg.activity.model {
        ActivityModel::Constant { a0 } => a0,
        ActivityModel::Cir { .. } => return Err(AppError::Usage("scaling test needs a constant activity".into())),
    };
    if !matches!(cfg.initial_values, InitialValues::Fixed(_)) {
        return Err(AppError::Usage("scaling test needs fixed initial values".into()));
    }
    // φ̄(T) = (e^{aT} - 1)/4 = c
    let horizon = (4.0 * c).ln_1p() / a;
    let cfg = cfg.clone().with_grid(horizon, horizon / 200.0);
    let dimension = 4.0 * set.iter().map(|&k| cfg.omega(k)).sum::<f64>();
    let pairs = engine.map_paths(&cfg, |v| {
        let sum = imm_core::portfolio::sum_of_atoms(&v, set)?;
        let last = v.path.len() - 1;
        let bar = |i: usize| sum.portfolio.value(i) / v.path.basis(i);
        let phi = besq_clock(&v);
        let s = (phi[last] - phi[0]) / c;
        let x0 = bar(0) / c;
        let mut rng = RngStream::new(cfg.seed, ORACLE_STREAM + v.path.index).rng();
        let fresh = s * sample_noncentral_chi_squared(dimension, x0 / s, &mut rng);
        Ok((bar(last) / c, fresh))
    })?;
    let (scaled, fresh): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(ks_two_sample(&scaled, &fresh)?)
}

/// Outcome of [`gop_dimension_test`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GopDimension {
    pub ks: KsResult,
    /// Average of Y* over the τ* clock, pooled over paths.
    pub time_average: f64,
    pub samples: usize,
}

/// Samples Y* each time τ* crosses a multiple of [`DECORRELATION`] and
/// tests them against Gamma(2, 2).
pub fn gop_dimension_test(engine: &Engine, cfg: &MarketConfig) -> AppResult<GopDimension> {
    let per_path = engine.map_paths(cfg, |v| {
        let gop = atom_gop_path(&v)?;
        let mut samples = Vec::new();
        let (mut area, mut span) = (0.0, 0.0);
        for i in 1..gop.clock.len() {
            let (t0, t1) = (gop.clock[i - 1], gop.clock[i]);
            if !(t1.is_finite() && gop.normalized[i].is_finite()) {
                return Err(imm_core::Error::NonFinite("atom GOP clock"));
            }
            if (t1 / DECORRELATION).floor() > (t0 / DECORRELATION).floor() {
                samples.push(gop.normalized[i]);
            }
            area += 0.5 * (gop.normalized[i - 1] + gop.normalized[i]) * (t1 - t0);
            span += t1 - t0;
        }
        Ok((samples, area, span))
    })?;
    let area: f64 = per_path.iter().map(|p| p.1).sum();
    let span: f64 = per_path.iter().map(|p| p.2).sum();
    let samples: Vec<f64> = per_path.into_iter().flat_map(|p| p.0).collect();
    let law = GammaLaw::stationary(1.0);
    let ks = ks_one_sample(&samples, |y| law.cdf(y), "Gamma(2, 2)")?;
    Ok(GopDimension { ks, time_average: area / span, samples: samples.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        assert_eq!(parse_suites("mvp,additivity").unwrap(), vec![Suite::Mvp, Suite::Additivity]);
        assert_eq!(parse_suites("all").unwrap(), Suite::ALL.to_vec());
        assert_eq!(parse_suites("kl, all").unwrap().len(), Suite::ALL.len());
        assert!(matches!(parse_suites("mvp,bogus"), Err(AppError::UnknownSuite { .. })));
        assert!(parse_suites("").is_err());
        for s in Suite::ALL {
            assert_eq!(Suite::from_name(s.name()), Some(s));
        }
    }

    #[test]
    fn failing_check_is_reported() {
        let c = Check::at_most("x", 3, "err", 0.5, 0.1);
        assert!(!c.passed);
        assert!(c.to_string().contains("seed 3"));
        assert!(!Check::at_least("x", 0, "p", f64::NAN, 0.01).passed);
        let r = SuiteResult::from_checks(Suite::Kl, Ok(vec![c]));
        assert!(!r.passed);
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn cheap_suites_pass() {
        let engine = Engine::new(2).unwrap();
        let h = Harness::new(&engine, REFERENCE_SEED);
        for s in [Suite::Conservation, Suite::SelfInformation, Suite::Phi] {
            let r = h.run_suite(s);
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn additivity_rejects_overlap_and_general_mode() {
        let engine = Engine::new(1).unwrap();
        let cfg = MarketConfig::info_minimizing(3, 0.0, 1.0, 0.0).with_paths(10, 1);
        assert!(additivity_test(&engine, &cfg, &[0, 1], &[1]).is_err());
        let mut general = cfg.clone();
        general.mode = Mode::GeneralStationary;
        assert!(additivity_test(&engine, &general, &[0], &[1]).is_err());
    }

    #[test]
    fn scaling_identity_sanity() {
        let engine = Engine::new(2).unwrap();
        let mut cfg = MarketConfig::info_minimizing(1, 0.03, 1.0, 0.05).with_paths(2000, 5);
        cfg.initial_values = InitialValues::Fixed(vec![1.0]);
        let ks = scaling_test(&engine, &cfg, &[0], 1.0).unwrap();
        assert!(!ks.rejects(0.001), "{ks:?}");
        assert!(scaling_test(&engine, &cfg, &[0], 0.0).is_err());
    }
}
