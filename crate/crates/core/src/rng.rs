//! Random streams and variates.
//!
//! Every replicate or chain draws from its own stream:
//! `split(master, index)` seeds a ChaCha8 generator from `master` with
//! [`SeedableRng::seed_from_u64`] and selects ChaCha stream `index`.
//! Streams with distinct indices never overlap.

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Derives the generator for stream `index` of `master`.
pub fn split(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Standard normal draw.
#[inline]
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Log of a Gamma(shape, 1) draw; exact for arbitrarily small shapes.
pub fn ln_gamma_variate<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    debug_assert!(shape > 0.0);
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).expect("valid gamma shape");
        let x: f64 = g.sample(rng);
        x.max(f64::MIN_POSITIVE).ln()
    } else {
        let g = Gamma::new(shape + 1.0, 1.0).expect("valid gamma shape");
        let x: f64 = g.sample(rng);
        x.max(f64::MIN_POSITIVE).ln() + open01(rng).ln() / shape
    }
}

/// Gamma draw with the given shape and rate.
pub fn gamma_variate<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    (ln_gamma_variate(rng, shape) - rate.ln()).exp()
}

/// Beta draw as `(ln x, ln(1 - x))`.
pub fn ln_beta_variate<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> (f64, f64) {
    let la = ln_gamma_variate(rng, a);
    let lb = ln_gamma_variate(rng, b);
    let m = la.max(lb);
    let ln_total = m + ((la - m).exp() + (lb - m).exp()).ln();
    (la - ln_total, lb - ln_total)
}

/// Beta draw clamped to the open interval (0, 1).
pub fn beta_variate<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    let (lx, l1mx) = ln_beta_variate(rng, a, b);
    clamp_open_unit(lx.exp(), l1mx)
}

/// Keeps a probability strictly inside (0, 1) given also `ln(1 - x)`.
pub(crate) fn clamp_open_unit(x: f64, ln_one_minus: f64) -> f64 {
    let upper = 1.0 - f64::EPSILON / 2.0;
    if ln_one_minus < (f64::EPSILON / 2.0).ln() {
        upper
    } else {
        x.clamp(f64::MIN_POSITIVE, upper)
    }
}

/// Poisson draw; zero mean gives zero.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    let d = rand_distr::Poisson::new(mean).expect("finite positive mean");
    let x: f64 = d.sample(rng);
    x as u64
}

/// Binomial draw.
pub fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    rand_distr::Binomial::new(n, p)
        .expect("valid binomial")
        .sample(rng)
}

/// Index drawn with probability proportional to `weights`.
pub fn categorical<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .unwrap_or(weights.len().saturating_sub(1))
}

/// Index drawn with probability proportional to `exp(log_weights)`.
pub fn categorical_log<R: Rng + ?Sized>(rng: &mut R, log_weights: &[f64]) -> usize {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let w: alloc::vec::Vec<f64> = log_weights.iter().map(|&l| (l - max).exp()).collect();
    categorical(rng, &w)
}
