//! TOML configuration files and command-line overrides.
//!
//! A configuration file is a TOML rendering of [`MarketConfig`]. In
//! info-minimizing mode `risk_premium_factors` may be omitted and defaults
//! to `1/n` per atom. A run manifest (`manifest.json`) is accepted wherever
//! a configuration is, so that a recorded run can be replayed.

use std::fs;
use std::path::Path;

use imm_core::market::{validate_config, MarketConfig};

use crate::error::{AppError, AppResult};
use crate::io::RunManifest;

/// Values given on the command line that replace fields of the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub grid_step: Option<f64>,
    pub horizon: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut MarketConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(p) = self.paths {
            cfg.paths = p;
        }
        if let Some(dt) = self.grid_step {
            cfg.grid_step = dt;
        }
        if let Some(t) = self.horizon {
            cfg.horizon = t;
        }
    }
}

/// Parses a configuration from TOML text.
pub fn parse_config(text: &str) -> Result<MarketConfig, String> {
    let mut value: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
    let info_mode = value.get("mode").and_then(|m| m.as_str()) == Some("info_minimizing");
    if info_mode && !value.contains_key("risk_premium_factors") {
        let n = value
            .get("n")
            .and_then(|n| n.as_integer())
            .filter(|&n| n > 0)
            .ok_or_else(|| "`n` must be a positive integer".to_string())?;
        let omega = toml::Value::Array(vec![toml::Value::Float(1.0 / n as f64); n as usize]);
        value.insert("risk_premium_factors".into(), omega);
    }
    toml::Value::Table(value).try_into().map_err(|e: toml::de::Error| e.message().to_string())
}

/// Renders a configuration as TOML.
pub fn render_config(cfg: &MarketConfig) -> String {
    toml::to_string_pretty(cfg).expect("configuration is always representable in TOML")
}

/// Reads a TOML configuration or a JSON run manifest, applies the
/// overrides and validates the result. Returns the configuration and the
/// validation warnings.
pub fn load_config(path: &Path, overrides: &Overrides) -> AppResult<(MarketConfig, Vec<String>)> {
    let text = fs::read_to_string(path).map_err(|source| AppError::ConfigRead { path: path.into(), source })?;
    let parse_err = |message: String| AppError::ConfigParse { path: path.into(), message };
    let mut cfg = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str::<RunManifest>(&text).map_err(|e| parse_err(e.to_string()))?.config
    } else {
        parse_config(&text).map_err(parse_err)?
    };
    overrides.apply(&mut cfg);
    let warnings = checked(&cfg)?;
    Ok((cfg, warnings))
}

/// Validates a configuration, returning its warnings.
pub fn checked(cfg: &MarketConfig) -> AppResult<Vec<String>> {
    let report = validate_config(cfg);
    if report.is_ok() {
        Ok(report.warnings)
    } else {
        Err(AppError::InvalidConfig(report.violations.iter().map(|v| v.to_string()).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use imm_core::market::{ActivityModel, InitialValues, Mode, RateModel};

    const MINIMAL: &str = r#"
n = 2
mode = "info_minimizing"
net_risk_adjusted_return = 0.05
initial_values = "sample_stationary"
horizon = 1.0
grid_step = 0.01
paths = 2
seed = 7

[interest_rate]
kind = "constant"
r0 = 0.03

[activity.model]
kind = "constant"
a0 = 0.2
"#;

    #[test]
    fn minimal_info_config_parses_with_default_factors() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.risk_premium_factors, vec![0.5, 0.5]);
        assert_eq!(cfg.mode, Mode::InfoMinimizing);
        assert_eq!(cfg.interest_rate, RateModel::Constant { r0: 0.03 });
        assert_eq!(cfg.activity.model, ActivityModel::Constant { a0: 0.2 });
        assert!(cfg.activity.shared_across_atoms);
        assert_eq!(cfg.initial_values, InitialValues::SampleStationary);
        assert!(checked(&cfg).is_ok());
    }

    #[test]
    fn rendered_config_round_trips() {
        let mut cfg = MarketConfig::info_minimizing(3, 0.01, 0.3, 0.1).with_grid(2.0, 0.05).with_paths(4, 11);
        cfg.initial_values = InitialValues::Fixed(vec![0.2, 0.3, 0.5]);
        cfg.activity.model = ActivityModel::Cir { a0: 0.3, speed: 2.0, level: 0.3, vol: 0.2 };
        assert_eq!(parse_config(&render_config(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn overrides_replace_fields() {
        let mut cfg = parse_config(MINIMAL).unwrap();
        Overrides { seed: Some(1), paths: Some(9), grid_step: Some(0.5), horizon: Some(3.0) }.apply(&mut cfg);
        assert_eq!((cfg.seed, cfg.paths, cfg.grid_step, cfg.horizon), (1, 9, 0.5, 3.0));
    }

    #[test]
    fn malformed_and_invalid_configs_are_rejected() {
        assert!(parse_config("n = ").is_err());
        assert!(parse_config("n = 0\nmode = \"info_minimizing\"").is_err());
        let mut cfg = parse_config(MINIMAL).unwrap();
        cfg.risk_premium_factors = vec![0.6, 0.6];
        assert!(matches!(checked(&cfg), Err(AppError::InvalidConfig(_))));
    }
}
