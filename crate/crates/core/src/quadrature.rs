//! Globally adaptive Gauss–Legendre quadrature.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982_0,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Tolerances and limits for [`Quadrature::integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_intervals: 20_000,
        }
    }
}

/// Estimate and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss10<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut s = 0.0;
    for i in 0..5 {
        let dx = half * NODES[i];
        s += WEIGHTS[i] * (f(mid - dx) + f(mid + dx));
    }
    s * half
}

impl Quadrature {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    fn piece<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> Result<Piece> {
        let whole = gauss10(f, lo, hi);
        let mid = 0.5 * (lo + hi);
        let split = gauss10(f, lo, mid) + gauss10(f, mid, hi);
        if !split.is_finite() || !whole.is_finite() {
            return Err(Error::NonFinite {
                variable: "integrand",
            });
        }
        Ok(Piece {
            lo,
            hi,
            value: split,
            error: (split - whole).abs(),
        })
    }

    /// Integrates `f` over the finite interval `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<Integral> {
        if a == b {
            return Ok(Integral {
                value: 0.0,
                error: 0.0,
                intervals: 0,
            });
        }
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Domain {
                what: "integration limit",
                value: if a.is_finite() { b } else { a },
                reason: "limits must be finite",
            });
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let first = Self::piece(&mut f, lo, hi)?;
        let mut value = first.value;
        let mut error = first.error;
        let mut heap = BinaryHeap::new();
        heap.push(first);
        while error > self.abs_tol.max(self.rel_tol * value.abs()) {
            if heap.len() >= self.max_intervals {
                return Err(Error::Quadrature {
                    estimate: sign * value,
                    error,
                    tolerance: self.abs_tol.max(self.rel_tol * value.abs()),
                    intervals: heap.len(),
                });
            }
            let worst = heap.pop().expect("heap is never empty");
            let mid = 0.5 * (worst.lo + worst.hi);
            if !(mid > worst.lo && mid < worst.hi) {
                // Interval cannot be split further in floating point.
                return Err(Error::Quadrature {
                    estimate: sign * value,
                    error,
                    tolerance: self.abs_tol.max(self.rel_tol * value.abs()),
                    intervals: heap.len() + 1,
                });
            }
            let left = Self::piece(&mut f, worst.lo, mid)?;
            let right = Self::piece(&mut f, mid, worst.hi)?;
            value += left.value + right.value - worst.value;
            error += left.error + right.error - worst.error;
            heap.push(left);
            heap.push(right);
            if error < 0.0 {
                // Recompute from scratch to shed accumulated rounding.
                error = heap.iter().map(|p| p.error).sum();
            }
        }
        value = heap.iter().map(|p| p.value).sum();
        Ok(Integral {
            value: sign * value,
            error,
            intervals: heap.len(),
        })
    }

    /// Integrates `f` over `[a, ∞)` via `x = a + t/(1 - t)`.
    pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64) -> Result<Integral> {
        self.integrate(
            |t| {
                if t >= 1.0 {
                    return 0.0;
                }
                let s = 1.0 - t;
                let v = f(a + t / s) / (s * s);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            },
            0.0,
            1.0,
        )
    }

    /// Integrates `f` over `[a, b]` with `a > 0` on the scale `θ = e^t`.
    pub fn integrate_log_scale<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<Integral> {
        self.integrate(
            |t| {
                let x = t.exp();
                f(x) * x
            },
            a.ln(),
            b.ln(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let q = Quadrature::default();
        let r = q.integrate(|x| x.powi(7) - 3.0 * x * x, -1.0, 2.0).unwrap();
        let exact = (256.0 - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-12);
    }

    #[test]
    fn reversed_limits_negate() {
        let q = Quadrature::default();
        let a = q.integrate(|x| x.sin(), 0.0, 2.0).unwrap().value;
        let b = q.integrate(|x| x.sin(), 2.0, 0.0).unwrap().value;
        assert!((a + b).abs() < 1e-14);
    }

    #[test]
    fn integrable_singularity() {
        let q = Quadrature::default();
        let r = q.integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn semi_infinite() {
        let q = Quadrature::default();
        let r = q.integrate_to_infinity(|x| (-x).exp(), 0.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        let r = q.integrate_to_infinity(|x| 1.0 / (1.0 + x * x), 0.0).unwrap();
        assert!((r.value - core::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn log_scale() {
        let q = Quadrature::default();
        // ∫_{1e-30}^{1} s x^{s-1} dx = 1 - 1e-30^s
        let s = 0.01;
        let r = q
            .integrate_log_scale(|x| s * x.powf(s - 1.0), 1e-30, 1.0)
            .unwrap();
        let exact = 1.0 - (1e-30f64).powf(s);
        assert!((r.value - exact).abs() < 1e-10);
    }

    #[test]
    fn failure_reports_diagnostics() {
        let q = Quadrature {
            max_intervals: 4,
            ..Quadrature::default()
        };
        let err = q.integrate(|x| (1.0 / x).sin(), 1e-6, 1.0).unwrap_err();
        assert!(matches!(err, Error::Quadrature { intervals: 4, .. }));
    }
}
