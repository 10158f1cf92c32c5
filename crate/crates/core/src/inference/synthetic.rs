//! Synthetic data from a known set of features.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::Matrix;
use crate::error::{positive, Error, Result};
use crate::rng::normal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "D")]
    pub d: usize,
    pub features: usize,
    /// Probability that a row uses a given feature.
    pub feature_probability: f64,
    /// Standard deviation of feature coordinates.
    #[serde(default = "unit")]
    pub feature_sd: f64,
    #[serde(default = "unit")]
    pub weight_sd: f64,
    pub noise_sd: f64,
}

fn unit() -> f64 {
    1.0
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.features == 0 {
            return Err(Error::Empty("N, D and features must be positive"));
        }
        if !(0.0..=1.0).contains(&self.feature_probability) {
            return Err(Error::InvalidParameter {
                name: "feature_probability",
                value: self.feature_probability,
                reason: "must lie in [0, 1]",
            });
        }
        positive("feature_sd", self.feature_sd)?;
        positive("weight_sd", self.weight_sd)?;
        positive("noise_sd", self.noise_sd)?;
        Ok(())
    }
}

/// Observations with the features, indicators and weights that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticData {
    pub y: Matrix,
    pub features: Matrix,
    pub x: Matrix<bool>,
    pub w: Matrix,
}

impl SyntheticData {
    pub fn active_per_row(&self) -> f64 {
        self.x.as_slice().iter().filter(|v| **v).count() as f64 / self.y.rows() as f64
    }
}

/// `y_n = Σ_f x_{n,f} w_{n,f} ψ_f + ε_n` with `ψ_f ~ N(0, feature_sd² I)`,
/// `x_{n,f} ~ Bernoulli(feature_probability)`, `w_{n,f} ~ N(0, weight_sd²)` and
/// `ε_n ~ N(0, noise_sd² I)`.
pub fn generate_synthetic<R: Rng + ?Sized>(config: &SyntheticConfig, rng: &mut R) -> Result<SyntheticData> {
    config.validate()?;
    let features = Matrix::from_fn(config.features, config.d, |_, _| config.feature_sd * normal(rng));
    let x = Matrix::from_fn(config.n, config.features, |_, _| rng.random::<f64>() < config.feature_probability);
    let w = Matrix::from_fn(config.n, config.features, |_, _| config.weight_sd * normal(rng));
    let y = Matrix::from_fn(config.n, config.d, |n, c| {
        let signal: f64 = (0..config.features)
            .filter(|&f| x[(n, f)])
            .map(|f| w[(n, f)] * features[(f, c)])
            .sum();
        signal + config.noise_sd * normal(rng)
    });
    Ok(SyntheticData { y, features, x, w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::split;

    #[test]
    fn shapes_and_rates() {
        let cfg = SyntheticConfig {
            n: 4000,
            d: 5,
            features: 3,
            feature_probability: 0.4,
            feature_sd: 1.0,
            weight_sd: 1.0,
            noise_sd: 0.1,
        };
        let s = generate_synthetic(&cfg, &mut split(1, 0)).unwrap();
        assert_eq!((s.y.rows(), s.y.cols()), (4000, 5));
        assert!((s.active_per_row() - 1.2).abs() < 0.05);
        let again = generate_synthetic(&cfg, &mut split(1, 0)).unwrap();
        assert_eq!(s, again);
        assert!(generate_synthetic(&SyntheticConfig { noise_sd: 0.0, ..cfg }, &mut split(1, 0)).is_err());
    }
}
