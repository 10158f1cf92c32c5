//! Two-parameter BFRY law and the competing i.i.d. approximation built on it.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use super::table::{Coordinate, InverseCdfTable, UpperTail};
use crate::error::{positive, Error, Result};
use crate::quadrature::Quadrature;
use crate::rng::{ln_gamma_variate, open01};
use crate::special::ln_gamma;

const KNOTS: usize = 4096;

/// BFRY law with density `(c/Γ(1-α)) s^{-α-1} (1 - exp(-β s))`, `β = (α/c)^{1/α}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bfry {
    c: f64,
    alpha: f64,
}

/// Log density of the BFRY law.
pub fn bfry_log_density(c: f64, alpha: f64, s: f64) -> Result<f64> {
    let law = Bfry::new(c, alpha)?;
    if !(s > 0.0) {
        return Err(Error::Domain {
            what: "s",
            value: s,
            reason: "must be strictly positive",
        });
    }
    Ok(law.ln_pdf(s))
}

impl Bfry {
    pub fn new(c: f64, alpha: f64) -> Result<Self> {
        positive("c", c)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain {
                what: "alpha",
                value: alpha,
                reason: "must lie in (0, 1)",
            });
        }
        Ok(Self { c, alpha })
    }

    /// `β = (α/c)^{1/α}`.
    pub fn rate(&self) -> f64 {
        ((self.alpha / self.c).ln() / self.alpha).exp()
    }

    pub fn ln_pdf(&self, s: f64) -> f64 {
        let beta = self.rate();
        self.c.ln() - ln_gamma(1.0 - self.alpha) - (self.alpha + 1.0) * s.ln()
            + (-(-beta * s).exp_m1()).ln()
    }

    /// Exact draw `G U^{-1/α} / β` with `G ~ Gamma(1-α)`, returned on the log scale.
    pub fn sample_ln_exact<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = ln_gamma_variate(rng, 1.0 - self.alpha);
        g - open01(rng).ln() / self.alpha - self.rate().ln()
    }

    /// Quantile table built from the density by quadrature.
    pub fn table(&self) -> Result<InverseCdfTable> {
        let beta = self.rate();
        let lo = 1e-8 / beta;
        let hi = 1e12 / beta;
        let a = self.alpha;
        let front = self.c.ln() - ln_gamma(1.0 - a);
        let q = Quadrature {
            abs_tol: 1e-18,
            rel_tol: 1e-11,
            ..Quadrature::default()
        };
        // Below `lo` substitute u = s^{1-α}.
        let lower = q
            .integrate(
                |u| {
                    let s = (u.ln() / (1.0 - a)).exp();
                    let frac = -(-beta * s).exp_m1() / s;
                    (front.exp() * frac) / (1.0 - a)
                },
                0.0,
                lo.powf(1.0 - a),
            )?
            .value;
        // Above `hi` the cutoff factor equals 1 in double precision.
        let upper = (front - a * hi.ln()).exp() / a;
        let (la, lb) = (lo.ln(), hi.ln());
        let knots: Vec<f64> = (0..KNOTS)
            .map(|i| (la + (lb - la) * i as f64 / (KNOTS - 1) as f64).exp())
            .collect();
        let mut masses = Vec::with_capacity(KNOTS - 1);
        for w in knots.windows(2) {
            masses.push(
                q.integrate_log_scale(|s| self.ln_pdf(s).exp(), w[0], w[1])?
                    .value,
            );
        }
        InverseCdfTable::from_masses(
            &knots,
            lower,
            &masses,
            upper,
            Coordinate::Log,
            1.0 - a,
            UpperTail::Power(a),
        )
    }
}

/// Weight `J = S/(S+1)` from the log of a BFRY draw.
pub fn bfry_weight(ln_s: f64) -> f64 {
    // S/(S+1) = 1/(1 + e^{-ln S})
    (1.0 / (1.0 + (-ln_s).exp())).max(f64::MIN_POSITIVE)
}
