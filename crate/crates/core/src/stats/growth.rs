//! Realized growth rates and the implied net-risk-adjusted return.

use alloc::vec::Vec;
#[allow(unused_imports)]
use crate::float::Real;

use crate::error::{Error, Result};
use crate::information::mean_and_se;
use crate::path::MarketView;
use crate::portfolio::{portfolio_path, WeightsRule};

/// Realized growth rates `(ln S_T - ln S_0)/T` along one path.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathGrowth {
    pub savings: f64,
    pub ap: f64,
    pub mvp: f64,
    pub atom_gop: f64,
    pub extended_gop: f64,
    /// Time average of the average activity.
    pub mean_activity: f64,
}

impl PathGrowth {
    pub fn from_view(view: &MarketView<'_>) -> Result<Self> {
        let t = view.horizon();
        let g = |rule: WeightsRule| portfolio_path(&rule, view).map(|p| p.growth_rate(t));
        let path = view.path;
        let last = path.len() - 1;
        Ok(Self {
            savings: (path.ln_savings[last] - path.ln_savings[0]) / t,
            ap: g(WeightsRule::Ap)?,
            mvp: g(WeightsRule::Mvp)?,
            atom_gop: g(WeightsRule::AtomGop)?,
            extended_gop: g(WeightsRule::ExtendedGop)?,
            mean_activity: (path.average_clock[last] - path.average_clock[0]) / t,
        })
    }

    /// `(G^{MVP} - G^{A⁰}) / ā - 1` on this path.
    pub fn implied_lambda_hat(&self) -> f64 {
        (self.mvp - self.savings) / self.mean_activity - 1.0
    }
}

/// Path-ordered collection of [`PathGrowth`] values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GrowthAccumulator {
    pub paths: Vec<PathGrowth>,
}

impl GrowthAccumulator {
    pub fn push(&mut self, g: PathGrowth) {
        self.paths.push(g);
    }

    pub fn merge(&mut self, other: GrowthAccumulator) {
        self.paths.extend(other.paths);
    }

    pub fn report(&self, configured_lambda_hat: f64, horizon: f64) -> Result<GrowthReport> {
        let m = self.paths.len();
        if m < 2 {
            return Err(Error::TooFewSamples { got: m, need: 2 });
        }
        let avg = |f: fn(&PathGrowth) -> f64| self.paths.iter().map(f).sum::<f64>() / m as f64;
        let savings = avg(|g| g.savings);
        let mvp = avg(|g| g.mvp);
        let mean_activity = avg(|g| g.mean_activity);
        let per_path: Vec<f64> = self.paths.iter().map(PathGrowth::implied_lambda_hat).collect();
        let (_, se) = mean_and_se(&per_path);
        let rms = (per_path
            .iter()
            .map(|l| (l - configured_lambda_hat) * (l - configured_lambda_hat))
            .sum::<f64>()
            / m as f64)
            .sqrt();
        let gop_minus_ap: Vec<f64> = self.paths.iter().map(|g| g.atom_gop - g.ap).collect();
        let (gop_excess, gop_excess_se) = mean_and_se(&gop_minus_ap);
        Ok(GrowthReport {
            savings,
            ap: avg(|g| g.ap),
            mvp,
            atom_gop: avg(|g| g.atom_gop),
            extended_gop: avg(|g| g.extended_gop),
            mean_activity,
            implied_lambda_hat: (mvp - savings) / mean_activity - 1.0,
            implied_lambda_hat_se: se,
            implied_lambda_hat_rms_error: rms,
            configured_lambda_hat,
            gop_excess_over_ap: gop_excess,
            gop_excess_over_ap_se: gop_excess_se,
            paths: m,
            horizon,
        })
    }
}

/// Path-averaged realized growth rates.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthReport {
    pub savings: f64,
    pub ap: f64,
    pub mvp: f64,
    pub atom_gop: f64,
    pub extended_gop: f64,
    /// Estimate of E[a].
    pub mean_activity: f64,
    /// `(G^{MVP} - G^{A⁰}) / E[a] - 1` from path averages.
    pub implied_lambda_hat: f64,
    /// Standard error of the per-path implied values.
    pub implied_lambda_hat_se: f64,
    /// Root mean square of the per-path errors against the configured λ̂.
    pub implied_lambda_hat_rms_error: f64,
    pub configured_lambda_hat: f64,
    /// Mean of `G^{S*} - G^{AP}` over paths.
    pub gop_excess_over_ap: f64,
    pub gop_excess_over_ap_se: f64,
    pub paths: usize,
    pub horizon: f64,
}

impl GrowthReport {
    /// Largest distance of any growth rate from `r`.
    pub fn max_distance_from(&self, r: f64) -> f64 {
        [self.savings, self.ap, self.mvp, self.atom_gop, self.extended_gop]
            .iter()
            .map(|g| (g - r).abs())
            .fold(0.0, f64::max)
    }
}

/// Growth report over the paths of `views`.
pub fn growth_report<'a>(views: impl IntoIterator<Item = MarketView<'a>>) -> Result<GrowthReport> {
    let mut acc = GrowthAccumulator::default();
    let mut first = None;
    for v in views {
        first.get_or_insert((v.config.net_risk_adjusted_return, v.horizon()));
        acc.push(PathGrowth::from_view(&v)?);
    }
    let (lambda_hat, horizon) = first.ok_or(Error::TooFewSamples { got: 0, need: 2 })?;
    acc.report(lambda_hat, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::MarketConfig;
    use crate::path::simulate_market;

    #[test]
    fn implied_lambda_hat_at_long_horizon() {
        let cfg = MarketConfig::info_minimizing(1, 0.03, 0.2, 0.05).with_grid(500.0, 0.1).with_paths(60, 1);
        let set = simulate_market(&cfg).unwrap();
        let r = growth_report(set.views()).unwrap();
        assert!((r.implied_lambda_hat - 0.05).abs() < 0.01, "{r:?}");
        assert!((r.mean_activity - 0.2).abs() < 1e-12);
        assert!((r.savings - 0.03).abs() < 1e-12);
        assert!(r.gop_excess_over_ap > -3.0 * r.gop_excess_over_ap_se);
    }

    #[test]
    fn zero_net_return() {
        let cfg = MarketConfig::info_minimizing(2, 0.03, 0.2, 0.0).with_grid(500.0, 0.1).with_paths(40, 2);
        let set = simulate_market(&cfg).unwrap();
        let r = growth_report(set.views()).unwrap();
        assert!(((r.mvp - r.savings) / r.mean_activity - 1.0).abs() < 0.02, "{r:?}");
    }

    #[test]
    fn vanishing_activity_collapses_growth_to_the_rate() {
        let cfg = MarketConfig::info_minimizing(2, 0.03, 1e-4, 0.05).with_grid(500.0, 0.5).with_paths(10, 3);
        let set = simulate_market(&cfg).unwrap();
        let r = growth_report(set.views()).unwrap();
        assert!(r.max_distance_from(0.03) < 1e-3, "{r:?}");
    }
}
