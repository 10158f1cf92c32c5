//! Beta laws restricted to an interval.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{categorical_log, open01};
use crate::special::{ln_beta_inc_reg, ln_beta_inc_reg_upper, log_add_exp, log_sub_exp};

/// Intervals narrower than this are treated as a point.
pub const DEGENERATE_WIDTH: f64 = 1e-14;

/// Relative width at which bisection stops.
const BISECTION_TOLERANCE: f64 = 1e-12;

/// Interval mass, relative to the tail it is computed from, below which
/// inversion is abandoned for rejection sampling.
const MIN_RELATIVE_MASS: f64 = 1e-8;

const MAX_REJECTIONS: usize = 100_000;

/// A draw with a flag set when the interval was too narrow to sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedDraw {
    pub value: f64,
    pub degenerate: bool,
}

/// Draw from the density proportional to `t^{a-1} (1-t)^{b-1}` on `[lo, hi]`.
///
/// `a = 0` is allowed when `lo > 0`. Uses inversion of the regularized
/// incomplete beta function by bisection, and adaptive rejection on `ln t`
/// when the interval mass is lost to cancellation.
pub fn sample_truncated_beta<R: Rng + ?Sized>(
    rng: &mut R,
    a: f64,
    b: f64,
    lo: f64,
    hi: f64,
) -> Result<TruncatedDraw> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "a",
            value: a,
            reason: "must be finite and nonnegative",
        });
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "b",
            value: b,
            reason: "must be finite and positive",
        });
    }
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::Domain {
            what: "interval",
            value: hi - lo,
            reason: "needs 0 <= lo <= hi <= 1",
        });
    }
    if hi - lo < DEGENERATE_WIDTH {
        return Ok(TruncatedDraw {
            value: 0.5 * (lo + hi),
            degenerate: true,
        });
    }
    if a == 0.0 && lo == 0.0 {
        return Err(Error::Domain {
            what: "lo",
            value: lo,
            reason: "a zero first shape needs a positive lower end",
        });
    }
    let value = if a > 0.0 {
        match invert(rng, a, b, lo, hi) {
            Some(v) => v,
            None => log_concave_rejection(rng, a, b, lo, hi)?,
        }
    } else {
        log_concave_rejection(rng, a, b, lo, hi)?
    };
    Ok(TruncatedDraw {
        value: value.clamp(lo, hi),
        degenerate: false,
    })
}

fn invert<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64, lo: f64, hi: f64) -> Option<f64> {
    let ln_lower_lo = ln_beta_inc_reg(a, b, lo);
    let ln_lower_hi = ln_beta_inc_reg(a, b, hi);
    let use_upper = ln_lower_hi > -core::f64::consts::LN_2 && ln_beta_inc_reg_upper(a, b, lo) < -core::f64::consts::LN_2;
    let (ln_near, ln_far, f): (f64, f64, fn(f64, f64, f64) -> f64) = if use_upper {
        // mass measured from the right tail, decreasing in x
        (
            ln_beta_inc_reg_upper(a, b, hi),
            ln_beta_inc_reg_upper(a, b, lo),
            ln_beta_inc_reg_upper,
        )
    } else {
        (ln_lower_lo, ln_lower_hi, ln_beta_inc_reg)
    };
    if !(ln_far > ln_near) || !ln_far.is_finite() {
        return None;
    }
    let ln_mass = log_sub_exp(ln_far, ln_near);
    if !ln_mass.is_finite() || (ln_mass - ln_far).exp() < MIN_RELATIVE_MASS {
        return None;
    }
    let target = log_add_exp(ln_near, open01(rng).ln() + ln_mass);
    let (mut l, mut r) = (lo, hi);
    let stop = BISECTION_TOLERANCE * (hi - lo);
    for _ in 0..200 {
        if r - l <= stop {
            break;
        }
        let m = 0.5 * (l + r);
        let below = f(a, b, m) < target;
        // lower tail increases in x, upper tail decreases
        if below != use_upper {
            l = m;
        } else {
            r = m;
        }
    }
    Some(0.5 * (l + r))
}

/// `g(u) = a u + (b-1) ln(1 - e^u)` and `g'(u)`, the log-density of `u = ln t`.
fn ln_density(a: f64, b: f64, u: f64) -> (f64, f64) {
    let one_minus = -u.exp_m1();
    let g = a * u + if b == 1.0 { 0.0 } else { (b - 1.0) * one_minus.ln() };
    let dg = a - (b - 1.0) * u.exp() / one_minus;
    (g, dg)
}

#[derive(Debug, Clone, Copy)]
struct Tangent {
    u: f64,
    g: f64,
    slope: f64,
}

impl Tangent {
    fn at(&self, v: f64) -> f64 {
        self.g + self.slope * (v - self.u)
    }
}

/// `ln ∫ exp(tangent)` over `[l, r]`; `l` may be `-∞` when the slope is positive.
fn ln_piece_mass(t: &Tangent, l: f64, r: f64) -> f64 {
    let w = r - l;
    let s = t.slope;
    if s.abs() * w.min(1e300) < 1e-12 {
        t.at(l) + w.ln()
    } else if s > 0.0 {
        t.at(r) + (-(-s * w).exp_m1()).ln() - s.ln()
    } else {
        t.at(l) + (-(s * w).exp_m1()).ln() - (-s).ln()
    }
}

fn sample_piece<R: Rng + ?Sized>(rng: &mut R, t: &Tangent, l: f64, r: f64) -> f64 {
    let w = r - l;
    let s = t.slope;
    let u = open01(rng);
    if s.abs() * w.min(1e300) < 1e-12 {
        l + u * w
    } else if s > 0.0 {
        r + (-u * -(-s * w).exp_m1()).ln_1p() / s
    } else {
        l + (-u * -(s * w).exp_m1()).ln_1p() / s
    }
}

/// Adaptive rejection sampling of `u = ln t`, whose log-density is concave for `b >= 1`.
fn log_concave_rejection<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64, lo: f64, hi: f64) -> Result<f64> {
    if b < 1.0 {
        return Err(Error::Unsupported(
            "rejection fallback for truncated beta needs b >= 1",
        ));
    }
    let left = lo.ln();
    let right = hi.ln();
    let mut start: Vec<f64> = if left.is_finite() {
        let w = right - left;
        [0.1, 0.5, 0.9].iter().map(|f| left + f * w).collect()
    } else {
        let mut u = right - 1.0;
        while ln_density(a, b, u).1 <= 0.0 {
            u = 2.0 * u - 1.0;
        }
        alloc::vec![u - 1.0, u, 0.5 * (u + right)]
    };
    start.sort_by(f64::total_cmp);
    let mut tangents: Vec<Tangent> = start
        .into_iter()
        .map(|u| {
            let (g, slope) = ln_density(a, b, u);
            Tangent { u, g, slope }
        })
        .collect();
    for _ in 0..MAX_REJECTIONS {
        let mut bounds = Vec::with_capacity(tangents.len() + 1);
        bounds.push(left);
        for pair in tangents.windows(2) {
            let (p, q) = (pair[0], pair[1]);
            let z = if (p.slope - q.slope).abs() < 1e-12 * (1.0 + p.slope.abs()) {
                0.5 * (p.u + q.u)
            } else {
                (q.g - p.g - q.u * q.slope + p.u * p.slope) / (p.slope - q.slope)
            };
            bounds.push(z.clamp(p.u, q.u));
        }
        bounds.push(right);
        let ln_masses: Vec<f64> = tangents
            .iter()
            .enumerate()
            .map(|(i, t)| ln_piece_mass(t, bounds[i], bounds[i + 1]))
            .collect();
        let i = categorical_log(rng, &ln_masses);
        let t = tangents[i];
        let v = sample_piece(rng, &t, bounds[i], bounds[i + 1]);
        let (g, slope) = ln_density(a, b, v);
        if open01(rng).ln() <= g - t.at(v) {
            return Ok(v.exp());
        }
        if g.is_finite() && slope.is_finite() {
            let at = tangents.partition_point(|p| p.u < v);
            if tangents.get(at).is_none_or(|p| p.u != v) {
                tangents.insert(at, Tangent { u: v, g, slope });
            }
        }
    }
    Err(Error::NonFinite {
        variable: "truncated beta rejection sampler",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Quadrature;
    use crate::rng::split;
    use crate::stats::{mean, standard_error};

    fn quadrature_mean(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
        let q = Quadrature::default();
        let dens = |t: f64| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0);
        let z = q.integrate(dens, lo, hi).unwrap().value;
        let m = q.integrate(|t| t * dens(t), lo, hi).unwrap().value;
        m / z
    }

    fn check(a: f64, b: f64, lo: f64, hi: f64, seed: u64) {
        let mut rng = split(seed, 0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| {
                let d = sample_truncated_beta(&mut rng, a, b, lo, hi).unwrap();
                assert!(!d.degenerate);
                assert!(lo <= d.value && d.value <= hi);
                d.value
            })
            .collect();
        let exact = quadrature_mean(a, b, lo, hi);
        let se = standard_error(&xs);
        assert!((mean(&xs) - exact).abs() < 3.0 * se, "{a} {b} [{lo},{hi}]: {} vs {exact} ± {se}", mean(&xs));
    }

    #[test]
    fn matches_quadrature_mean() {
        check(2.0, 5.0, 0.1, 0.6, 1);
        check(0.5, 30.0, 0.2, 0.9, 2);
        check(1.0, 1.0, 0.0, 1.0, 3);
        check(3.0, 1.0, 0.0, 0.4, 4);
    }

    #[test]
    fn zero_first_shape_uses_rejection() {
        check(0.0, 20.0, 0.01, 0.5, 5);
        check(0.0, 1.0, 0.2, 0.3, 6);
    }

    #[test]
    fn rejection_agrees_with_quadrature() {
        let mut rng = split(7, 0);
        let (a, b, lo, hi) = (2.5, 8.0, 0.05, 0.7);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| log_concave_rejection(&mut rng, a, b, lo, hi).unwrap())
            .collect();
        let exact = quadrature_mean(a, b, lo, hi);
        assert!((mean(&xs) - exact).abs() < 3.0 * standard_error(&xs));
        // unbounded on the log scale
        let xs: Vec<f64> = (0..100_000)
            .map(|_| log_concave_rejection(&mut rng, 1.5, 40.0, 0.0, 1.0).unwrap())
            .collect();
        assert!((mean(&xs) - 1.5 / 41.5).abs() < 3.0 * standard_error(&xs));
    }

    #[test]
    fn cancellation_falls_back() {
        let mut rng = split(8, 0);
        let (lo, hi) = (0.5, 0.5 + 1e-11);
        assert!(invert(&mut rng, 3.0, 4.0, lo, hi).is_none());
        for _ in 0..100 {
            let d = sample_truncated_beta(&mut rng, 3.0, 4.0, lo, hi).unwrap();
            assert!(lo <= d.value && d.value <= hi);
        }
    }

    #[test]
    fn degenerate_and_invalid() {
        let mut rng = split(9, 0);
        let d = sample_truncated_beta(&mut rng, 2.0, 2.0, 0.3, 0.3 + 1e-15).unwrap();
        assert!(d.degenerate);
        assert_eq!(d.value, 0.3 + 0.5e-15);
        assert!(sample_truncated_beta(&mut rng, 0.0, 2.0, 0.0, 0.5).is_err());
        assert!(sample_truncated_beta(&mut rng, 1.0, 2.0, 0.6, 0.5).is_err());
        assert!(sample_truncated_beta(&mut rng, -1.0, 2.0, 0.1, 0.5).is_err());
    }
}
