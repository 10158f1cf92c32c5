//! Inverse-CDF tables with monotone cubic interpolation and power-law tails.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::open01;

/// Interpolation coordinate for the quantile function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    /// `φ = ln θ` on `(0, ∞)`.
    Log,
    /// `ln θ` below 1/2 and `-ln 4 - ln(1-θ)` above, on `(0, 1)`.
    LogUnit,
}

impl Coordinate {
    pub fn forward(self, theta: f64) -> f64 {
        match self {
            Coordinate::Log => theta.ln(),
            Coordinate::LogUnit => {
                if theta <= 0.5 {
                    theta.ln()
                } else {
                    -(4.0f64).ln() - (-theta).ln_1p()
                }
            }
        }
    }

    pub fn inverse(self, phi: f64) -> f64 {
        match self {
            Coordinate::Log => phi.exp(),
            Coordinate::LogUnit => {
                if phi <= -core::f64::consts::LN_2 {
                    phi.exp()
                } else {
                    1.0 - 0.25 * (-phi).exp()
                }
            }
        }
    }
}

/// Behaviour beyond the last knot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpperTail {
    /// Remaining mass is placed at the last knot.
    Truncate,
    /// Survival proportional to `θ^{-p}`.
    Power(f64),
    /// Survival proportional to `(1 - θ)^p` near 1.
    UnitPower(f64),
}

/// Quantile function of a continuous law on `(0, ∞)` or `(0, 1)`.
#[derive(Debug, Clone)]
pub struct InverseCdfTable {
    coord: Coordinate,
    phi: Vec<f64>,
    cdf: Vec<f64>,
    slopes: Vec<f64>,
    lower_exponent: f64,
    upper: UpperTail,
}

impl InverseCdfTable {
    /// Builds a table from knot locations and the probability masses
    /// below the first knot, in each cell and above the last knot.
    ///
    /// Below the first knot the CDF is taken proportional to `θ^{lower_exponent}`.
    pub fn from_masses(
        knots: &[f64],
        lower_mass: f64,
        cell_masses: &[f64],
        upper_mass: f64,
        coord: Coordinate,
        lower_exponent: f64,
        upper: UpperTail,
    ) -> Result<Self> {
        if knots.len() < 2 || cell_masses.len() + 1 != knots.len() {
            return Err(Error::Dimension(alloc::format!(
                "{} knots need {} cell masses, got {}",
                knots.len(),
                knots.len().saturating_sub(1),
                cell_masses.len()
            )));
        }
        if !(lower_exponent > 0.0) {
            return Err(Error::InvalidParameter {
                name: "lower_exponent",
                value: lower_exponent,
                reason: "must be positive",
            });
        }
        let total = lower_mass + cell_masses.iter().sum::<f64>() + upper_mass;
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::NonFinite {
                variable: "table mass",
            });
        }
        let mut phi = Vec::with_capacity(knots.len());
        let mut cdf = Vec::with_capacity(knots.len());
        let mut acc = lower_mass;
        phi.push(coord.forward(knots[0]));
        cdf.push(acc / total);
        for (i, &m) in cell_masses.iter().enumerate() {
            if !(m >= 0.0) {
                return Err(Error::NonFinite {
                    variable: "cell mass",
                });
            }
            acc += m;
            let f = (acc / total).min(1.0);
            let p = coord.forward(knots[i + 1]);
            if f > *cdf.last().expect("nonempty") && p > *phi.last().expect("nonempty") {
                phi.push(p);
                cdf.push(f);
            }
        }
        if phi.len() < 2 {
            return Err(Error::Empty("table has no cells with positive mass"));
        }
        let slopes = pchip_slopes(&cdf, &phi);
        Ok(Self {
            coord,
            phi,
            cdf,
            slopes,
            lower_exponent,
            upper,
        })
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// Quantile at probability `u` in (0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.cdf.len();
        let f0 = self.cdf[0];
        let last = self.cdf[n - 1];
        let theta = if u < f0 {
            let phi0 = self.phi[0];
            let ln_theta = phi0 + (u / f0).ln() / self.lower_exponent;
            match self.coord {
                Coordinate::Log => ln_theta.exp(),
                Coordinate::LogUnit => self.coord.inverse(ln_theta.min(phi0)),
            }
        } else if u >= last {
            let theta_last = self.coord.inverse(self.phi[n - 1]);
            let ratio = (1.0 - u) / (1.0 - last);
            match self.upper {
                UpperTail::Truncate => theta_last,
                UpperTail::Power(p) => {
                    if ratio > 0.0 {
                        theta_last * ratio.powf(-1.0 / p)
                    } else {
                        f64::MAX
                    }
                }
                UpperTail::UnitPower(p) => 1.0 - (1.0 - theta_last) * ratio.max(0.0).powf(1.0 / p),
            }
        } else {
            // cdf[i] <= u < cdf[i + 1]
            let i = self.cdf.partition_point(|&c| c <= u) - 1;
            let (f_lo, f_hi) = (self.cdf[i], self.cdf[i + 1]);
            let h = f_hi - f_lo;
            let t = (u - f_lo) / h;
            let t2 = t * t;
            let t3 = t2 * t;
            let phi = (2.0 * t3 - 3.0 * t2 + 1.0) * self.phi[i]
                + (t3 - 2.0 * t2 + t) * h * self.slopes[i]
                + (-2.0 * t3 + 3.0 * t2) * self.phi[i + 1]
                + (t3 - t2) * h * self.slopes[i + 1];
            self.coord
                .inverse(phi.clamp(self.phi[i], self.phi[i + 1]))
        };
        theta.clamp(f64::MIN_POSITIVE, f64::MAX)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(open01(rng))
    }
}

// Fritsch–Butland monotone slopes of φ(F).
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut m = alloc::vec![0.0; n];
    if n == 2 {
        m[0] = delta[0];
        m[1] = delta[0];
        return m;
    }
    for i in 1..n - 1 {
        let (d0, d1) = (delta[i - 1], delta[i]);
        if d0 * d1 <= 0.0 || !d0.is_finite() || !d1.is_finite() {
            m[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    m[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}
