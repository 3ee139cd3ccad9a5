//! Portfolios along simulated paths.
//!
//! Every portfolio is self-financing and rebalanced at grid frequency:
//! `S_{i+1}/S_i = Σ_k π^k_i A^k_{i+1}/A^k_i + π^0_i A⁰_{i+1}/A⁰_i`. Buy-and-hold
//! sums of atoms (the AP and any atom set) are evaluated directly as sums.
//! All portfolios start at the initial AP value `Σ_k A^k_0` unless they
//! hold only a subset of atoms, in which case they start at that subset's
//! value.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::float::Real;
use crate::market::{MarketConfig, SquareRootSpec};
use crate::path::{MarketView, EPS_VOL};

/// Tolerance of the sum-to-one check, relative to `max(1, Σ|π|)`.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Weights over primary security accounts. With `includes_savings` the
/// first entry is the savings account and the rest follow atom order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PortfolioWeights {
    pub weights: Vec<f64>,
    pub includes_savings: bool,
}

impl PortfolioWeights {
    pub fn new(weights: Vec<f64>, includes_savings: bool) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("portfolio weight"));
        }
        let sum: f64 = weights.iter().sum();
        let scale = weights.iter().map(|w| w.abs()).sum::<f64>().max(1.0);
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE * scale {
            return Err(Error::WeightSum(sum));
        }
        Ok(Self { weights, includes_savings })
    }

    pub fn savings(&self) -> f64 {
        if self.includes_savings {
            self.weights[0]
        } else {
            0.0
        }
    }

    pub fn atoms(&self) -> &[f64] {
        if self.includes_savings {
            &self.weights[1..]
        } else {
            &self.weights
        }
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// How a portfolio chooses its weights at each grid point.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightsRule {
    AtomGop,
    ExtendedGop,
    Mvp,
    Ap,
    /// Buy-and-hold sum over the given zero-based atom indices.
    AtomSet(Vec<usize>),
    Static(PortfolioWeights),
}

/// Value path of a portfolio.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioPath {
    pub log_values: Vec<f64>,
    /// (σ^π_t)² = Σ_k (π^k_t β^k_t)².
    pub sq_vol: Vec<f64>,
    /// ln S_{t_{i+1}} - ln S_{t_i}.
    pub log_increments: Vec<f64>,
}

impl PortfolioPath {
    fn from_log_values(log_values: Vec<f64>, sq_vol: Vec<f64>) -> Self {
        let log_increments = log_values.windows(2).map(|w| w[1] - w[0]).collect();
        Self { log_values, sq_vol, log_increments }
    }

    pub fn value(&self, i: usize) -> f64 {
        self.log_values[i].exp()
    }

    pub fn values(&self) -> Vec<f64> {
        self.log_values.iter().map(|v| v.exp()).collect()
    }

    /// Realized growth rate `(ln S_T - ln S_0) / T`.
    pub fn growth_rate(&self, horizon: f64) -> f64 {
        (self.log_values[self.log_values.len() - 1] - self.log_values[0]) / horizon
    }
}

pub(crate) fn check_index(k: usize, n: usize) -> Result<()> {
    if k >= n {
        Err(Error::IndexOutOfRange { index: k, n })
    } else {
        Ok(())
    }
}

pub(crate) fn check_set(set: &[usize], n: usize) -> Result<()> {
    if set.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    let mut seen = vec![false; n];
    for &k in set {
        check_index(k, n)?;
        if seen[k] {
            return Err(Error::OverlappingIndexSets(k));
        }
        seen[k] = true;
    }
    Ok(())
}

/// Atom GOP weights: the risk premium factors.
pub fn atom_gop_weights(cfg: &MarketConfig) -> PortfolioWeights {
    PortfolioWeights { weights: cfg.risk_premium_factors.clone(), includes_savings: false }
}

fn check_volatilities(beta: &[f64]) -> Result<()> {
    for (k, &b) in beta.iter().enumerate() {
        if !b.is_finite() {
            return Err(Error::NonFinite("volatility"));
        }
        if b <= 0.0 {
            return Err(Error::ZeroVolatility(k));
        }
    }
    Ok(())
}

/// Extended-market GOP: `π^k = (λ* - r)/(β^k)² + ω^k` and
/// `π^0 = (r - λ*) Σ_k (β^k)^{-2}`.
pub fn extended_gop_weights(lambda_star: f64, r: f64, beta: &[f64], omega: &[f64]) -> Result<PortfolioWeights> {
    check_volatilities(beta)?;
    if beta.len() != omega.len() {
        return Err(Error::WeightLength { got: omega.len(), n: beta.len() });
    }
    let spread = lambda_star - r;
    let mut weights = Vec::with_capacity(beta.len() + 1);
    let precision: f64 = beta.iter().map(|b| 1.0 / (b * b)).sum();
    weights.push(-spread * precision);
    weights.extend(beta.iter().zip(omega).map(|(b, w)| spread / (b * b) + w));
    PortfolioWeights::new(weights, true)
}

/// Minimum variance portfolio: `π^k = (β^k)^{-2} / Σ_l (β^l)^{-2}`.
pub fn mvp_weights(beta: &[f64]) -> Result<PortfolioWeights> {
    check_volatilities(beta)?;
    let inv: Vec<f64> = beta.iter().map(|b| 1.0 / (b * b)).collect();
    let total: f64 = inv.iter().sum();
    Ok(PortfolioWeights { weights: inv.into_iter().map(|x| x / total).collect(), includes_savings: false })
}

fn column(rows: &[Vec<f64>], i: usize) -> Vec<f64> {
    rows.iter().map(|row| row[i]).collect()
}

/// Largest componentwise gap between MVP and AP weights at each grid point.
pub fn mvp_equals_ap_check(view: &MarketView<'_>) -> Result<Vec<f64>> {
    let path = view.path;
    (0..path.len())
        .map(|i| {
            let mvp = mvp_weights(&column(&path.volatilities, i))?;
            let total: f64 = path.atoms.iter().map(|a| a[i]).sum();
            Ok(mvp
                .weights
                .iter()
                .zip(&path.atoms)
                .map(|(w, a)| (w - a[i] / total).abs())
                .fold(0.0, f64::max))
        })
        .collect()
}

/// Weights chosen by `rule` at grid point i.
pub fn weights_at(rule: &WeightsRule, view: &MarketView<'_>, i: usize) -> Result<PortfolioWeights> {
    let path = view.path;
    let n = view.n();
    match rule {
        WeightsRule::AtomGop => Ok(atom_gop_weights(view.config)),
        WeightsRule::ExtendedGop => extended_gop_weights(
            path.lambda_star[i],
            path.rate[i],
            &column(&path.volatilities, i),
            &view.config.risk_premium_factors,
        ),
        WeightsRule::Mvp => mvp_weights(&column(&path.volatilities, i)),
        WeightsRule::Ap => {
            let total: f64 = path.atoms.iter().map(|a| a[i]).sum();
            Ok(PortfolioWeights { weights: path.atoms.iter().map(|a| a[i] / total).collect(), includes_savings: false })
        }
        WeightsRule::AtomSet(set) => {
            check_set(set, n)?;
            let total: f64 = set.iter().map(|&k| path.atoms[k][i]).sum();
            let mut weights = vec![0.0; n];
            for &k in set {
                weights[k] = path.atoms[k][i] / total;
            }
            Ok(PortfolioWeights { weights, includes_savings: false })
        }
        WeightsRule::Static(w) => {
            let got = w.atoms().len();
            if got != n {
                return Err(Error::WeightLength { got, n });
            }
            Ok(w.clone())
        }
    }
}

fn squared_volatility(w: &PortfolioWeights, view: &MarketView<'_>, i: usize) -> f64 {
    w.atoms()
        .iter()
        .zip(&view.path.volatilities)
        .map(|(p, b)| {
            let x = p * b[i];
            x * x
        })
        .sum()
}

/// Value path of the portfolio selected by `rule`.
pub fn portfolio_path(rule: &WeightsRule, view: &MarketView<'_>) -> Result<PortfolioPath> {
    let path = view.path;
    let len = path.len();
    let buy_and_hold: Option<Vec<usize>> = match rule {
        WeightsRule::Ap => Some((0..view.n()).collect()),
        WeightsRule::AtomSet(set) => {
            check_set(set, view.n())?;
            Some(set.clone())
        }
        _ => None,
    };
    if let Some(set) = buy_and_hold {
        let mut log_values = Vec::with_capacity(len);
        let mut sq_vol = Vec::with_capacity(len);
        for i in 0..len {
            let total: f64 = set.iter().map(|&k| path.atoms[k][i]).sum();
            log_values.push(total.ln());
            sq_vol.push(
                set.iter()
                    .map(|&k| {
                        let x = path.atoms[k][i] / total * path.volatilities[k][i];
                        x * x
                    })
                    .sum(),
            );
        }
        return Ok(PortfolioPath::from_log_values(log_values, sq_vol));
    }

    let mut log_values = Vec::with_capacity(len);
    let mut sq_vol = Vec::with_capacity(len);
    log_values.push(path.atoms.iter().map(|a| a[0]).sum::<f64>().ln());
    for i in 0..len {
        let w = weights_at(rule, view, i)?;
        sq_vol.push(squared_volatility(&w, view, i));
        if i + 1 == len {
            break;
        }
        let mut gross = w.savings() * (path.ln_savings[i + 1] - path.ln_savings[i]).exp();
        for (k, &p) in w.atoms().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let a0 = path.atoms[k][i];
            if a0 <= 0.0 {
                return Err(Error::Bankrupt(i));
            }
            gross += p * path.atoms[k][i + 1] / a0;
        }
        if !(gross > 0.0) || !gross.is_finite() {
            return Err(Error::Bankrupt(i + 1));
        }
        let last = log_values[i];
        log_values.push(last + gross.ln());
    }
    Ok(PortfolioPath::from_log_values(log_values, sq_vol))
}

/// A buy-and-hold sum of atoms together with its normalized value.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSum {
    pub portfolio: PortfolioPath,
    /// Y^𝒜 = Σ_{k∈𝒜} Y^k.
    pub normalized: Vec<f64>,
    /// Predicted square-root dynamics of Y^𝒜 in average activity time.
    pub spec: SquareRootSpec,
}

/// Sum of the atoms in `set` (zero-based indices).
pub fn sum_of_atoms(view: &MarketView<'_>, set: &[usize]) -> Result<AtomSum> {
    check_set(set, view.n())?;
    let portfolio = portfolio_path(&WeightsRule::AtomSet(set.to_vec()), view)?;
    let path = view.path;
    let normalized = (0..path.len()).map(|i| set.iter().map(|&k| path.normalized[k][i]).sum()).collect();
    let mean: f64 = set.iter().map(|&k| view.config.omega(k)).sum();
    Ok(AtomSum { portfolio, normalized, spec: SquareRootSpec::normalized_atom(mean) })
}

/// Atom GOP with its activity-time diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomGopPath {
    pub portfolio: PortfolioPath,
    /// Z_t = Σ_k (ω^k)² / Y^k.
    pub z: Vec<f64>,
    /// Atom-GOP activity a*_t = a_t Z_t Y*_t.
    pub activity: Vec<f64>,
    /// Normalized GOP Y*_t = S*_t / (B_t e^{τ*_t - τ*_0}).
    pub normalized: Vec<f64>,
    /// Atom-GOP activity time τ*_t with τ*_0 = 0.
    pub clock: Vec<f64>,
    /// Aggregated Brownian increments ΔW*.
    pub brownian: Vec<f64>,
}

/// Atom GOP of an information-minimizing path.
///
/// With `X = S*/B` and `u = e^{τ*}` the clock solves `du/dt = a Z X`,
/// which is integrated with the trapezoidal rule in log form; then
/// `Y* = X/u`.
pub fn atom_gop_path(view: &MarketView<'_>) -> Result<AtomGopPath> {
    if !view.config.is_info_minimizing() {
        return Err(Error::NotInfoMinimizing);
    }
    let path = view.path;
    let len = path.len();
    let n = view.n();
    let omega = &view.config.risk_premium_factors;
    let portfolio = portfolio_path(&WeightsRule::AtomGop, view)?;
    let a = &path.average_activity;

    let z: Vec<f64> = (0..len)
        .map(|i| (0..n).map(|k| omega[k] * omega[k] / path.clamped(k, i)).sum())
        .collect();
    // ln X with X = S*/B
    let lx: Vec<f64> = (0..len).map(|i| portfolio.log_values[i] - path.ln_basis[i]).collect();

    // ln u, advanced as ln u + ln(1 + Δu/u) so that u cannot overflow
    let mut clock = vec![0.0; len];
    for i in 0..len - 1 {
        let lu = clock[i];
        let du = 0.5
            * view.dt(i)
            * (a[i] * z[i] * (lx[i] - lu).exp() + a[i + 1] * z[i + 1] * (lx[i + 1] - lu).exp());
        clock[i + 1] = lu + du.ln_1p();
    }
    let normalized: Vec<f64> = lx.iter().zip(&clock).map(|(x, lu)| (x - lu).exp()).collect();
    let activity = (0..len).map(|i| a[i] * z[i] * normalized[i]).collect();

    let brownian = (0..len - 1)
        .map(|i| {
            let mid: Vec<f64> = (0..n)
                .map(|k| (0.5 * (path.normalized[k][i] + path.normalized[k][i + 1])).max(EPS_VOL))
                .collect();
            let zm: f64 = (0..n).map(|k| omega[k] * omega[k] / mid[k]).sum();
            (0..n).map(|k| omega[k] / mid[k].sqrt() * path.brownian[k][i]).sum::<f64>() / zm.sqrt()
        })
        .collect();

    Ok(AtomGopPath { portfolio, z, activity, normalized, clock, brownian })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{ActivityModel, ActivitySpec, Mode, VolatilityFunction};
    use crate::path::simulate_market;
    use crate::sampler::RngStream;
    use rand::Rng;

    fn info(n: usize) -> MarketConfig {
        MarketConfig::info_minimizing(n, 0.03, 0.2, 0.05).with_grid(10.0, 0.01).with_paths(2, 5)
    }

    #[test]
    fn atom_gop_weights_are_risk_premium_factors() {
        assert_eq!(atom_gop_weights(&info(3)).weights, vec![1.0 / 3.0; 3]);
        assert_eq!(atom_gop_weights(&info(1)).weights, vec![1.0]);
        let mut c = info(2);
        c.mode = Mode::GeneralStationary;
        c.risk_premium_factors = vec![0.6, 0.4];
        assert_eq!(atom_gop_weights(&c).weights, vec![0.6, 0.4]);
    }

    #[test]
    fn extended_gop_examples() {
        let w = extended_gop_weights(0.05, 0.05, &[0.3, 0.7], &[0.5, 0.5]).unwrap();
        assert_eq!(w.weights, vec![0.0, 0.5, 0.5]);
        let w = extended_gop_weights(0.04, 0.03, &[1.0], &[1.0]).unwrap();
        assert!((w.atoms()[0] - 1.01).abs() < 1e-15);
        assert!((w.savings() + 0.01).abs() < 1e-15);
        assert!(extended_gop_weights(0.04, 0.03, &[1.0, 0.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn extended_gop_sums_to_one_for_random_inputs() {
        let mut rng = RngStream::new(3, 0).rng();
        for _ in 0..10_000 {
            let n = rng.random_range(1..8);
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
            let s: f64 = raw.iter().sum();
            let omega: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let beta: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..3.0)).collect();
            let w = extended_gop_weights(rng.random_range(-0.2..0.2), rng.random_range(-0.1..0.1), &beta, &omega);
            assert!(w.is_ok());
        }
    }

    #[test]
    fn mvp_examples() {
        let w = mvp_weights(&[0.4, 0.4, 0.4]).unwrap();
        assert!(w.weights.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        let w = mvp_weights(&[1.0, 2.0]).unwrap();
        assert!((w.weights[0] - 0.8).abs() < 1e-15 && (w.weights[1] - 0.2).abs() < 1e-15);
        assert!(mvp_weights(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn mvp_beats_every_simplex_grid_point() {
        let beta = [0.3, 0.8, 1.7];
        let w = mvp_weights(&beta).unwrap();
        let var = |p: &[f64]| p.iter().zip(&beta).map(|(p, b)| (p * b) * (p * b)).sum::<f64>();
        let best = var(&w.weights);
        // 141 · 142 / 2 ≈ 10^4 points on the simplex
        let m = 140;
        for i in 0..=m {
            for j in 0..=m - i {
                let p = [i as f64 / m as f64, j as f64 / m as f64, (m - i - j) as f64 / m as f64];
                assert!(var(&p) >= best - 1e-15);
            }
        }
    }

    #[test]
    fn weight_sum_is_enforced() {
        assert!(PortfolioWeights::new(vec![0.5, 0.5], false).is_ok());
        assert_eq!(PortfolioWeights::new(vec![0.5, 0.6], false), Err(Error::WeightSum(1.1)));
    }

    #[test]
    fn mvp_equals_ap_on_info_minimizing_paths() {
        for n in [1, 2, 5] {
            let set = simulate_market(&info(n)).unwrap();
            for v in set.views() {
                let dev = mvp_equals_ap_check(&v).unwrap();
                assert!(dev.iter().all(|&d| d <= 1e-10));
                if n == 1 {
                    assert!(dev.iter().all(|&d| d == 0.0));
                }
            }
        }
    }

    #[test]
    fn mvp_differs_from_ap_for_general_phi() {
        let c = MarketConfig {
            mode: Mode::GeneralStationary,
            volatility_function: VolatilityFunction::polynomial(vec![0.3, 1.0]),
            activity: ActivitySpec { model: ActivityModel::Constant { a0: 0.2 }, shared_across_atoms: true },
            ..info(3)
        };
        let set = simulate_market(&c).unwrap();
        let dev = mvp_equals_ap_check(&set.view(0)).unwrap();
        assert!(dev.iter().fold(0.0f64, |m, &d| m.max(d)) > 1e-3);
    }

    #[test]
    fn ap_is_the_sum_of_atoms_and_single_atom_portfolios_coincide() {
        let set = simulate_market(&info(3)).unwrap();
        let v = set.view(1);
        let ap = portfolio_path(&WeightsRule::Ap, &v).unwrap();
        for i in 0..v.path.len() {
            let total: f64 = v.path.atoms.iter().map(|a| a[i]).sum();
            assert!((ap.value(i) / total - 1.0).abs() < 1e-14);
        }

        let set = simulate_market(&info(1)).unwrap();
        let v = set.view(0);
        let ap = portfolio_path(&WeightsRule::Ap, &v).unwrap();
        let gop = portfolio_path(&WeightsRule::AtomGop, &v).unwrap();
        let mvp = portfolio_path(&WeightsRule::Mvp, &v).unwrap();
        for i in 0..v.path.len() {
            assert!((ap.log_values[i] - gop.log_values[i]).abs() < 1e-11);
            assert!((ap.log_values[i] - mvp.log_values[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn mvp_squared_volatility_is_activity_over_ap() {
        let set = simulate_market(&info(4)).unwrap();
        let v = set.view(0);
        let mvp = portfolio_path(&WeightsRule::Mvp, &v).unwrap();
        let gop = atom_gop_path(&v).unwrap();
        for i in 0..v.path.len() {
            let y_ap: f64 = (0..4).map(|k| v.path.normalized[k][i]).sum();
            let expected = v.path.average_activity[i] / y_ap;
            assert!((mvp.sq_vol[i] - expected).abs() <= 1e-10 * expected);
            assert!(mvp.sq_vol[i] < gop.portfolio.sq_vol[i]);
            assert!((gop.portfolio.sq_vol[i] - gop.z[i] * v.path.average_activity[i]).abs() <= 1e-10 * gop.portfolio.sq_vol[i]);
        }
    }

    #[test]
    fn sum_of_atoms_specs() {
        let set = simulate_market(&info(4)).unwrap();
        let v = set.view(0);
        let all = sum_of_atoms(&v, &[0, 1, 2, 3]).unwrap();
        assert!((all.spec.dimension() - 4.0).abs() < 1e-15 && (all.spec.mean - 1.0).abs() < 1e-15);
        assert!((sum_of_atoms(&v, &[2]).unwrap().spec.dimension() - 1.0).abs() < 1e-15);
        let pair = sum_of_atoms(&v, &[0, 3]).unwrap();
        assert!((pair.spec.dimension() - 2.0).abs() < 1e-15 && (pair.spec.mean - 0.5).abs() < 1e-15);
        assert_eq!(sum_of_atoms(&v, &[]).unwrap_err(), Error::EmptyIndexSet);
        assert!(sum_of_atoms(&v, &[4]).is_err());
        assert!(sum_of_atoms(&v, &[1, 1]).is_err());
        for i in 0..v.path.len() {
            let y = v.path.normalized[0][i] + v.path.normalized[3][i];
            assert_eq!(pair.normalized[i], y);
        }
    }

    #[test]
    fn single_atom_gop_reduces_to_the_atom() {
        let set = simulate_market(&info(1).with_grid(20.0, 0.001)).unwrap();
        let v = set.view(0);
        let gop = atom_gop_path(&v).unwrap();
        for i in 0..v.path.len() {
            let y = v.path.normalized[0][i];
            assert!((gop.z[i] * y - 1.0).abs() < 1e-12);
            assert!((gop.activity[i] / v.path.average_activity[i] - gop.normalized[i] / y).abs() < 1e-12);
            // trapezoidal clock error only
            assert!((gop.normalized[i] / y - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn aggregated_brownian_quadratic_variation() {
        let c = MarketConfig::info_minimizing(2, 0.03, 0.2, 0.05).with_grid(200.0, 0.01).with_paths(4, 17);
        let set = simulate_market(&c).unwrap();
        let mut qv = 0.0;
        for v in set.views() {
            qv += atom_gop_path(&v).unwrap().brownian.iter().map(|w| w * w).sum::<f64>();
        }
        let per_path = qv / 4.0;
        assert!((per_path / 200.0 - 1.0).abs() < 0.02, "{per_path}");
    }

    #[test]
    fn atom_gop_requires_info_minimizing() {
        let c = MarketConfig {
            mode: Mode::GeneralStationary,
            ..info(2)
        };
        let set = simulate_market(&c).unwrap();
        assert_eq!(atom_gop_path(&set.view(0)).unwrap_err(), Error::NotInfoMinimizing);
    }

    #[test]
    fn static_weights_must_match_the_market() {
        let set = simulate_market(&info(2)).unwrap();
        let w = PortfolioWeights::new(vec![0.2, 0.3, 0.5], false).unwrap();
        assert!(portfolio_path(&WeightsRule::Static(w), &set.view(0)).is_err());
        let w = PortfolioWeights::new(vec![0.5, 0.25, 0.25], true).unwrap();
        assert!(portfolio_path(&WeightsRule::Static(w), &set.view(0)).is_ok());
    }
}
