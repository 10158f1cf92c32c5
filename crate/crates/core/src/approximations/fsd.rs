//! Finite symmetric Dirichlet weights.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{positive, Error, Result};
use crate::rng::ln_gamma_variate;
use crate::special::log_sum_exp;

/// `Dir(γ/K, …, γ/K)` on `K` atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteSymmetricDirichlet {
    pub gamma: f64,
    pub k: usize,
}

impl FiniteSymmetricDirichlet {
    pub fn new(gamma: f64, k: usize) -> Result<Self> {
        positive("gamma", gamma)?;
        if k == 0 {
            return Err(Error::InvalidParameter {
                name: "K",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(Self { gamma, k })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let shape = self.gamma / self.k as f64;
        let ln_g: Vec<f64> = (0..self.k).map(|_| ln_gamma_variate(rng, shape)).collect();
        let total = log_sum_exp(&ln_g);
        ln_g.iter()
            .map(|l| (l - total).exp().max(f64::MIN_POSITIVE))
            .collect()
    }
}
