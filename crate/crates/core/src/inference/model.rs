//! The linear-Gaussian feature model and its data containers.

use alloc::vec::Vec;
use core::ops::{Index, IndexMut};
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::special::ln_gamma;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix<T>", into = "RawMatrix<T>")]
#[serde(bound(serialize = "T: Clone + Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Matrix<T = f64> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> TryFrom<RawMatrix<T>> for Matrix<T> {
    type Error = Error;
    fn try_from(r: RawMatrix<T>) -> Result<Self> {
        Matrix::from_vec(r.rows, r.cols, r.data)
    }
}

impl<T> From<Matrix<T>> for RawMatrix<T> {
    fn from(m: Matrix<T>) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl<T: Clone> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: alloc::vec![value; rows * cols],
        }
    }
}

impl<T> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(alloc::format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Row-major `(row, col, value)` triplets.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        let cols = self.cols.max(1);
        self.data.iter().enumerate().map(move |(i, v)| (i / cols, i % cols, v))
    }
}

impl<T: Clone> Matrix<T> {
    /// Keeps the listed rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    /// Column `j` of the result is column `order[j]` of `self`.
    pub fn permute_cols(&self, order: &[usize]) -> Self {
        Self::from_fn(self.rows, order.len(), |i, j| self[(i, order[j])].clone())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Shape-rate gamma prior on a precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub const VAGUE: GammaPrior = GammaPrior {
        shape: 1e-6,
        rate: 1e-6,
    };

    pub fn validate(&self) -> Result<()> {
        positive("shape", self.shape)?;
        positive("rate", self.rate)?;
        Ok(())
    }

    pub fn ln_density(&self, x: f64) -> f64 {
        self.shape * self.rate.ln() - ln_gamma(self.shape) + (self.shape - 1.0) * x.ln() - self.rate * x
    }
}

impl Default for GammaPrior {
    fn default() -> Self {
        Self::VAGUE
    }
}

/// Which finite prior sits on the feature probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    /// `τ_i ~ Beta(γα/K, α)` independently.
    Aifa,
    /// `τ_i = Π_{j≤i} p_j` with `p_j ~ Beta(γ, 1)`; needs `α = 1`.
    BondessonTfa,
}

/// Beta–Bernoulli linear-Gaussian factor model:
/// `y_n ~ N(Σ_i x_{n,i} w_{n,i} ψ_i, γ_e⁻¹ I)`, `w_{n,i} ~ N(0, γ_w⁻¹)`,
/// `ψ_i ~ N(0, s I)`, `x_{n,i} ~ Bernoulli(τ_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLinearGaussian", into = "RawLinearGaussian")]
pub struct LinearGaussianModel {
    d: usize,
    gamma: f64,
    alpha: f64,
    k: usize,
    weight_precision: GammaPrior,
    noise_precision: GammaPrior,
    psi_variance: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLinearGaussian {
    #[serde(rename = "D")]
    d: usize,
    gamma: f64,
    alpha: f64,
    #[serde(rename = "K")]
    k: usize,
    #[serde(default)]
    weight_precision: GammaPrior,
    #[serde(default)]
    noise_precision: GammaPrior,
    #[serde(default)]
    psi_variance: Option<f64>,
}

impl TryFrom<RawLinearGaussian> for LinearGaussianModel {
    type Error = Error;
    fn try_from(r: RawLinearGaussian) -> Result<Self> {
        let mut m = LinearGaussianModel::new(r.d, r.gamma, r.alpha, r.k)?
            .with_precision_priors(r.weight_precision, r.noise_precision)?;
        if let Some(s) = r.psi_variance {
            m = m.with_psi_variance(s)?;
        }
        Ok(m)
    }
}

impl From<LinearGaussianModel> for RawLinearGaussian {
    fn from(m: LinearGaussianModel) -> Self {
        RawLinearGaussian {
            d: m.d,
            gamma: m.gamma,
            alpha: m.alpha,
            k: m.k,
            weight_precision: m.weight_precision,
            noise_precision: m.noise_precision,
            psi_variance: Some(m.psi_variance),
        }
    }
}

impl LinearGaussianModel {
    /// Vague `Gamma(1e-6, 1e-6)` precision priors and ground covariance `I/D`.
    pub fn new(d: usize, gamma: f64, alpha: f64, k: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter {
                name: "D",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if k == 0 {
            return Err(Error::InvalidParameter {
                name: "K",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        positive("gamma", gamma)?;
        positive("alpha", alpha)?;
        Ok(Self {
            d,
            gamma,
            alpha,
            k,
            weight_precision: GammaPrior::VAGUE,
            noise_precision: GammaPrior::VAGUE,
            psi_variance: 1.0 / d as f64,
        })
    }

    pub fn with_precision_priors(mut self, weight: GammaPrior, noise: GammaPrior) -> Result<Self> {
        weight.validate()?;
        noise.validate()?;
        self.weight_precision = weight;
        self.noise_precision = noise;
        Ok(self)
    }

    pub fn with_psi_variance(mut self, s: f64) -> Result<Self> {
        self.psi_variance = positive("psi_variance", s)?;
        Ok(self)
    }

    pub fn with_k(mut self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter {
                name: "K",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        self.k = k;
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weight_precision(&self) -> GammaPrior {
        self.weight_precision
    }

    pub fn noise_precision(&self) -> GammaPrior {
        self.noise_precision
    }

    pub fn psi_variance(&self) -> f64 {
        self.psi_variance
    }

    /// Errors unless `kind` has a Gibbs path for this model.
    pub fn check_kind(&self, kind: PriorKind) -> Result<()> {
        if kind == PriorKind::BondessonTfa && self.alpha != 1.0 {
            return Err(Error::Unsupported(
                "the Bondesson truncation has a Gibbs path only for alpha = 1",
            ));
        }
        Ok(())
    }

    pub(crate) fn check_data(&self, data: &Matrix) -> Result<()> {
        if data.cols() != self.d {
            return Err(Error::Dimension(alloc::format!(
                "data has {} columns, model has D = {}",
                data.cols(),
                self.d
            )));
        }
        if let Some((i, j, _)) = data.entries().find(|(_, _, v)| !v.is_finite()) {
            return Err(Error::Dimension(alloc::format!("non-finite datum at ({i}, {j})")));
        }
        Ok(())
    }
}
