//! Kolmogorov-Smirnov tests with asymptotic p-values.
//!
//! The p-value uses the Kolmogorov limit law evaluated at
//! `(√n + 0.12 + 0.11/√n) D` (Stephens' small-sample correction); for two
//! samples n is the effective size `n₁n₂/(n₁+n₂)`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::float::Real;

/// Smallest sample accepted by the tests.
pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Sample size (effective size for two samples).
    pub sample_size: f64,
    pub reference: String,
}

impl KsResult {
    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // theta-function form converges fast for small x
        let c = core::f64::consts::PI * core::f64::consts::PI / (8.0 * x * x);
        let mut cdf = 0.0;
        for j in 1..=20 {
            let k = (2 * j - 1) as f64;
            cdf += (-k * k * c).exp();
        }
        let cdf = (2.0 * core::f64::consts::PI).sqrt() / x * cdf;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * x * x).exp();
            s += if j % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

fn p_value(d: f64, n: f64) -> f64 {
    let sn = n.sqrt();
    kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: xs.len(), need: MIN_SAMPLES });
    }
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::NonFinite("sample"));
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    Ok(v)
}

/// One-sample test of `samples` against the continuous law with `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, reference: &str) -> Result<KsResult> {
    let v = sorted(samples)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(KsResult { statistic: d, p_value: p_value(d, n), sample_size: n, reference: reference.into() })
}

/// Two-sample test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let x = sorted(a)?;
    let y = sorted(b)?;
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = n * m / (n + m);
    Ok(KsResult { statistic: d, p_value: p_value(d, ne), sample_size: ne, reference: "two-sample".into() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::information::GammaLaw;
    use crate::sampler::RngStream;

    #[test]
    fn kolmogorov_reference_values() {
        // P(K > x) from the series at high precision
        assert!((kolmogorov_survival(1.0) - 0.26999967167735456).abs() < 1e-10);
        assert!((kolmogorov_survival(1.36) - 0.049485876755377876).abs() < 1e-12);
        assert!((kolmogorov_survival(1.6276) - 0.010001537333060776).abs() < 1e-12);
        assert!((kolmogorov_survival(0.5) - 0.9639452436648751).abs() < 1e-10);
        // both branches agree where they meet
        let a = kolmogorov_survival(1.18 - 1e-12);
        let b = kolmogorov_survival(1.18);
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn identical_samples_have_zero_distance() {
        let xs: Vec<f64> = (0..500).map(|i| i as f64 * 0.37 % 1.0).collect();
        let r = ks_two_sample(&xs, &xs).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn separated_laws_are_rejected() {
        let mut rng = RngStream::new(2, 0).rng();
        let a: Vec<f64> = (0..10_000).map(|_| GammaLaw::stationary(1.0).sample(&mut rng)).collect();
        let b: Vec<f64> = (0..10_000).map(|_| GammaLaw::stationary(0.5).sample(&mut rng)).collect();
        assert!(ks_two_sample(&a, &b).unwrap().rejects(0.01));
        let g = GammaLaw::stationary(0.5);
        assert!(ks_one_sample(&a, |x| g.cdf(x), "Gamma(1, 2)").unwrap().rejects(0.01));
    }

    #[test]
    fn too_few_samples() {
        assert_eq!(
            ks_one_sample(&[1.0; 10], |x| x, "u").unwrap_err(),
            Error::TooFewSamples { got: 10, need: 100 }
        );
    }

    #[test]
    fn calibrated_under_the_null() {
        let g = GammaLaw::stationary(1.0);
        let mut rejections = 0;
        let mut two_rejections = 0;
        for seed in 0..200 {
            let mut rng = RngStream::new(1000 + seed, 0).rng();
            let xs: Vec<f64> = (0..20_000).map(|_| g.sample(&mut rng)).collect();
            if ks_one_sample(&xs, |x| g.cdf(x), "Gamma(2, 2)").unwrap().rejects(0.01) {
                rejections += 1;
            }
            if ks_two_sample(&xs[..10_000], &xs[10_000..]).unwrap().rejects(0.01) {
                two_rejections += 1;
            }
        }
        // 1% ± 1 percentage point over 200 seeds
        assert!(rejections <= 4, "{rejections}");
        assert!(two_rejections <= 4, "{two_rejections}");
    }
}
