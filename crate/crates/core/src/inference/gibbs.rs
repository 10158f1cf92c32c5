//! Blocked Gibbs sampling for the linear-Gaussian feature model.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{LinearGaussianModel, Matrix, PriorKind};
use super::truncated_beta::sample_truncated_beta;
use crate::error::{Error, Result};
use crate::rng::{beta_variate, clamp_open_unit, gamma_variate, ln_beta_variate, normal, open01};
use crate::special::ln_beta;

/// Parameters of a beta law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParameters {
    pub a: f64,
    pub b: f64,
}

/// Complete conditional of `τ_k` under the AIFA prior:
/// `Beta(γα/K + Σ_n x_{n,k}, α + N - Σ_n x_{n,k})`.
pub fn aifa_tau_conditional(model: &LinearGaussianModel, column_sum: usize, n: usize) -> Result<BetaParameters> {
    if column_sum > n {
        return Err(Error::Domain {
            what: "column sum",
            value: column_sum as f64,
            reason: "cannot exceed the number of rows",
        });
    }
    let c = model.gamma() * model.alpha() / model.k() as f64;
    Ok(BetaParameters {
        a: c + column_sum as f64,
        b: model.alpha() + (n - column_sum) as f64,
    })
}

/// Sampler state. `x` and `w` are `N×K`, `psi` is `K×D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsState {
    kind: PriorKind,
    tau: Vec<f64>,
    psi: Matrix,
    x: Matrix<bool>,
    w: Matrix,
    gamma_w: f64,
    gamma_e: f64,
}

/// Unnormalized joint log-density, split by factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointTerms {
    pub tau: f64,
    pub x: f64,
    pub psi: f64,
    pub w: f64,
    pub gamma_w: f64,
    pub gamma_e: f64,
    pub likelihood: f64,
}

impl JointTerms {
    pub fn total(&self) -> f64 {
        self.tau + self.x + self.psi + self.w + self.gamma_w + self.gamma_e + self.likelihood
    }
}

/// Per-sweep bookkeeping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    /// Truncated `τ` updates whose interval was narrower than the sampling tolerance.
    pub degenerate_tau: usize,
}

/// Summary statistics of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub active_total: usize,
    pub active_per_row: f64,
    pub mean_tau: f64,
    pub gamma_w: f64,
    pub gamma_e: f64,
}

fn ln_bernoulli(x: bool, tau: f64) -> f64 {
    if x {
        tau.ln()
    } else {
        (-tau).ln_1p()
    }
}

fn sample_tau_prior<R: Rng + ?Sized>(model: &LinearGaussianModel, kind: PriorKind, rng: &mut R) -> Vec<f64> {
    let k = model.k();
    match kind {
        PriorKind::Aifa => {
            let c = model.gamma() * model.alpha() / k as f64;
            (0..k).map(|_| beta_variate(rng, c, model.alpha())).collect()
        }
        PriorKind::BondessonTfa => {
            let mut ln_tau = 0.0;
            (0..k)
                .map(|_| {
                    ln_tau += ln_beta_variate(rng, model.gamma(), 1.0).0;
                    clamp_open_unit(ln_tau.exp(), (-ln_tau.exp()).ln_1p())
                })
                .collect()
        }
    }
}

fn finite(variable: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { variable })
    }
}

impl GibbsState {
    /// Validates dimensions, ranges and, for the truncation, the ordering of `τ`.
    pub fn new(
        model: &LinearGaussianModel,
        kind: PriorKind,
        tau: Vec<f64>,
        psi: Matrix,
        x: Matrix<bool>,
        w: Matrix,
        gamma_w: f64,
        gamma_e: f64,
    ) -> Result<Self> {
        model.check_kind(kind)?;
        let k = model.k();
        if tau.len() != k || psi.rows() != k || psi.cols() != model.d() || x.cols() != k || w.cols() != k || w.rows() != x.rows() {
            return Err(Error::Dimension(alloc::format!(
                "state shapes tau {}, psi {}x{}, x {}x{}, w {}x{} do not match K = {k}, D = {}",
                tau.len(),
                psi.rows(),
                psi.cols(),
                x.rows(),
                x.cols(),
                w.rows(),
                w.cols(),
                model.d()
            )));
        }
        if let Some(&t) = tau.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::Domain {
                what: "tau",
                value: t,
                reason: "must lie in (0, 1)",
            });
        }
        if kind == PriorKind::BondessonTfa && tau.windows(2).any(|p| p[1] > p[0]) {
            return Err(Error::Domain {
                what: "tau",
                value: f64::NAN,
                reason: "must be non-increasing under the truncation prior",
            });
        }
        finite("psi", psi.as_slice().iter().sum())?;
        finite("w", w.as_slice().iter().sum())?;
        for (name, v) in [("gamma_w", gamma_w), ("gamma_e", gamma_e)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain {
                    what: name,
                    value: v,
                    reason: "must be positive and finite",
                });
            }
        }
        Ok(Self {
            kind,
            tau,
            psi,
            x,
            w,
            gamma_w,
            gamma_e,
        })
    }

    /// A joint draw of every latent variable from the prior, for `n` rows.
    pub fn sample_prior<R: Rng + ?Sized>(
        model: &LinearGaussianModel,
        kind: PriorKind,
        n: usize,
        rng: &mut R,
    ) -> Result<Self> {
        model.check_kind(kind)?;
        let tau = sample_tau_prior(model, kind, rng);
        let gamma_w = gamma_variate(rng, model.weight_precision().shape, model.weight_precision().rate);
        let gamma_e = gamma_variate(rng, model.noise_precision().shape, model.noise_precision().rate);
        let sd_psi = model.psi_variance().sqrt();
        let psi = Matrix::from_fn(model.k(), model.d(), |_, _| sd_psi * normal(rng));
        let x = Matrix::from_fn(n, model.k(), |_, j| rng.random::<f64>() < tau[j]);
        let sd_w = 1.0 / gamma_w.sqrt();
        let w = Matrix::from_fn(n, model.k(), |_, _| sd_w * normal(rng));
        Self::new(model, kind, tau, psi, x, w, gamma_w, gamma_e)
    }

    /// Starting point for a chain on `data`: prior draws for `τ`, `x` and `ψ`,
    /// unit weight precision and noise precision matched to the data scale.
    pub fn initialize<R: Rng + ?Sized>(
        model: &LinearGaussianModel,
        kind: PriorKind,
        data: &Matrix,
        rng: &mut R,
    ) -> Result<Self> {
        model.check_kind(kind)?;
        model.check_data(data)?;
        let tau = sample_tau_prior(model, kind, rng);
        let sd_psi = model.psi_variance().sqrt();
        let psi = Matrix::from_fn(model.k(), model.d(), |_, _| sd_psi * normal(rng));
        let x = Matrix::from_fn(data.rows(), model.k(), |_, j| rng.random::<f64>() < tau[j]);
        let w = Matrix::from_fn(data.rows(), model.k(), |_, _| normal(rng));
        let ms = data.as_slice().iter().map(|v| v * v).sum::<f64>() / data.as_slice().len().max(1) as f64;
        let gamma_e = if ms > 0.0 { 1.0 / ms } else { 1.0 };
        Self::new(model, kind, tau, psi, x, w, 1.0, gamma_e)
    }

    pub fn kind(&self) -> PriorKind {
        self.kind
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn psi(&self) -> &Matrix {
        &self.psi
    }

    pub fn x(&self) -> &Matrix<bool> {
        &self.x
    }

    pub fn w(&self) -> &Matrix {
        &self.w
    }

    pub fn gamma_w(&self) -> f64 {
        self.gamma_w
    }

    pub fn gamma_e(&self) -> f64 {
        self.gamma_e
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn k(&self) -> usize {
        self.tau.len()
    }

    pub fn column_sums(&self) -> Vec<usize> {
        let mut s = alloc::vec![0; self.k()];
        for (_, j, &v) in self.x.entries() {
            s[j] += usize::from(v);
        }
        s
    }

    pub fn summary(&self) -> StateSummary {
        let active_total = self.column_sums().iter().sum();
        StateSummary {
            active_total,
            active_per_row: active_total as f64 / self.n().max(1) as f64,
            mean_tau: self.tau.iter().sum::<f64>() / self.k() as f64,
            gamma_w: self.gamma_w,
            gamma_e: self.gamma_e,
        }
    }

    /// `Σ_i x_{n,i} w_{n,i} ψ_i` for row `n`.
    pub fn reconstruction(&self, n: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.psi.cols()];
        for k in 0..self.k() {
            if self.x[(n, k)] {
                let wk = self.w[(n, k)];
                for (o, p) in out.iter_mut().zip(self.psi.row(k)) {
                    *o += wk * p;
                }
            }
        }
        out
    }

    fn residuals(&self, data: &Matrix) -> Matrix {
        let mut e = data.clone();
        for n in 0..self.n() {
            let r = self.reconstruction(n);
            for (ei, ri) in e.row_mut(n).iter_mut().zip(&r) {
                *ei -= ri;
            }
        }
        e
    }

    /// A new observation matrix drawn from the likelihood.
    pub fn generate_data<R: Rng + ?Sized>(&self, rng: &mut R) -> Matrix {
        let sd = 1.0 / self.gamma_e.sqrt();
        let d = self.psi.cols();
        let mut y = Matrix::filled(self.n(), d, 0.0);
        for n in 0..self.n() {
            let r = self.reconstruction(n);
            for (yi, ri) in y.row_mut(n).iter_mut().zip(&r) {
                *yi = ri + sd * normal(rng);
            }
        }
        y
    }

    /// The same state with atoms reordered: atom `j` of the result is atom
    /// `order[j]` of `self`. Errors under the truncation prior unless the
    /// ordering of `τ` survives.
    pub fn permute_atoms(&self, model: &LinearGaussianModel, order: &[usize]) -> Result<Self> {
        let mut seen = alloc::vec![false; self.k()];
        if order.len() != self.k() || order.iter().any(|&i| i >= seen.len() || core::mem::replace(&mut seen[i], true)) {
            return Err(Error::Dimension(alloc::format!("not a permutation of 0..{}", self.k())));
        }
        let tau = order.iter().map(|&i| self.tau[i]).collect();
        let psi = Matrix::from_fn(self.k(), self.psi.cols(), |j, c| self.psi[(order[j], c)]);
        Self::new(
            model,
            self.kind,
            tau,
            psi,
            self.x.permute_cols(order),
            self.w.permute_cols(order),
            self.gamma_w,
            self.gamma_e,
        )
    }

    /// Every factor of the unnormalized joint log-density at `data`.
    pub fn joint_terms(&self, model: &LinearGaussianModel, data: &Matrix) -> JointTerms {
        let k = self.k();
        let tau = match self.kind {
            PriorKind::Aifa => {
                let c = model.gamma() * model.alpha() / k as f64;
                let a = model.alpha();
                self.tau
                    .iter()
                    .map(|&t| (c - 1.0) * t.ln() + (a - 1.0) * (-t).ln_1p() - ln_beta(c, a))
                    .sum()
            }
            PriorKind::BondessonTfa => {
                if self.tau.windows(2).any(|p| p[1] > p[0]) {
                    f64::NEG_INFINITY
                } else {
                    let g = model.gamma();
                    k as f64 * g.ln() + (g - 1.0) * self.tau[k - 1].ln()
                        - self.tau[..k - 1].iter().map(|t| t.ln()).sum::<f64>()
                }
            }
        };
        let x = self.x.entries().map(|(_, j, &v)| ln_bernoulli(v, self.tau[j])).sum();
        let s = model.psi_variance();
        let d = self.psi.cols() as f64;
        let psi = self
            .psi
            .as_slice()
            .chunks(self.psi.cols().max(1))
            .map(|row| -0.5 * d * (2.0 * PI * s).ln() - row.iter().map(|v| v * v).sum::<f64>() / (2.0 * s))
            .sum();
        let w = self
            .w
            .as_slice()
            .iter()
            .map(|v| 0.5 * (self.gamma_w / (2.0 * PI)).ln() - 0.5 * self.gamma_w * v * v)
            .sum();
        let e = self.residuals(data);
        let likelihood = (0..self.n())
            .map(|n| {
                0.5 * d * (self.gamma_e / (2.0 * PI)).ln()
                    - 0.5 * self.gamma_e * e.row(n).iter().map(|v| v * v).sum::<f64>()
            })
            .sum();
        JointTerms {
            tau,
            x,
            psi,
            w,
            gamma_w: model.weight_precision().ln_density(self.gamma_w),
            gamma_e: model.noise_precision().ln_density(self.gamma_e),
            likelihood,
        }
    }

    pub fn joint_log_density(&self, model: &LinearGaussianModel, data: &Matrix) -> f64 {
        self.joint_terms(model, data).total()
    }

    /// Redraws `(x_{n,k}, w_{n,k})` jointly for every row and atom: `x` from its
    /// conditional with `w` integrated out, then `w` given `x`.
    fn update_features<R: Rng + ?Sized>(&mut self, e: &mut Matrix, rows: core::ops::Range<usize>, rng: &mut R) -> Result<()> {
        let d = self.psi.cols();
        let mut r = alloc::vec![0.0; d];
        let sd_prior = 1.0 / self.gamma_w.sqrt();
        for n in rows {
            for k in 0..self.k() {
                let psi_k = self.psi.row(k);
                r.copy_from_slice(e.row(n));
                if self.x[(n, k)] {
                    let wk = self.w[(n, k)];
                    for (ri, p) in r.iter_mut().zip(psi_k) {
                        *ri += wk * p;
                    }
                }
                let norm2: f64 = psi_k.iter().map(|p| p * p).sum();
                let h: f64 = self.gamma_e * psi_k.iter().zip(&r).map(|(p, ri)| p * ri).sum::<f64>();
                let precision = self.gamma_w + self.gamma_e * norm2;
                let ln_evidence = 0.5 * (self.gamma_w / precision).ln() + 0.5 * h * h / precision;
                let t = self.tau[k];
                let logit = t.ln() - (-t).ln_1p() + ln_evidence;
                let on = finite("x log-odds", logit).map_or(logit > 0.0, |l| {
                    // P(x = 1) = 1/(1 + e^{-l})
                    open01(rng).ln() < -(-l).exp().ln_1p()
                });
                self.x[(n, k)] = on;
                let wk = if on {
                    h / precision + normal(rng) / precision.sqrt()
                } else {
                    sd_prior * normal(rng)
                };
                self.w[(n, k)] = finite("w", wk)?;
                let row = e.row_mut(n);
                for ((ei, ri), p) in row.iter_mut().zip(&r).zip(psi_k) {
                    *ei = if on { ri - wk * p } else { *ri };
                }
            }
        }
        Ok(())
    }

    fn update_psi<R: Rng + ?Sized>(&mut self, model: &LinearGaussianModel, e: &mut Matrix, rng: &mut R) -> Result<()> {
        let d = self.psi.cols();
        let mut m = alloc::vec![0.0; d];
        for k in 0..self.k() {
            m.iter_mut().for_each(|v| *v = 0.0);
            let mut precision = 1.0 / model.psi_variance();
            for n in 0..self.n() {
                if !self.x[(n, k)] {
                    continue;
                }
                let wk = self.w[(n, k)];
                let psi_k = self.psi.row(k);
                let row = e.row_mut(n);
                for (ei, p) in row.iter_mut().zip(psi_k) {
                    *ei += wk * p;
                }
                precision += self.gamma_e * wk * wk;
                for (mi, ei) in m.iter_mut().zip(row.iter()) {
                    *mi += self.gamma_e * wk * ei;
                }
            }
            let sd = 1.0 / precision.sqrt();
            for (c, mi) in m.iter().enumerate() {
                self.psi[(k, c)] = finite("psi", mi / precision + sd * normal(rng))?;
            }
            for n in 0..self.n() {
                if self.x[(n, k)] {
                    let wk = self.w[(n, k)];
                    let psi_k = self.psi.row(k);
                    for (ei, p) in e.row_mut(n).iter_mut().zip(psi_k) {
                        *ei -= wk * p;
                    }
                }
            }
        }
        Ok(())
    }

    #[cfg_attr(not(debug_assertions), allow(unused_variables))]
    fn update_precisions<R: Rng + ?Sized>(
        &mut self,
        model: &LinearGaussianModel,
        data: &Matrix,
        e: &Matrix,
        rng: &mut R,
    ) -> Result<()> {
        let prior_w = model.weight_precision();
        let ss_w: f64 = self.w.as_slice().iter().map(|v| v * v).sum();
        let shape_w = prior_w.shape + 0.5 * self.w.as_slice().len() as f64;
        #[cfg(debug_assertions)]
        let before = self.joint_terms(model, data);
        self.gamma_w = finite("gamma_w", gamma_variate(rng, shape_w, prior_w.rate + 0.5 * ss_w))?;
        #[cfg(debug_assertions)]
        {
            let after = self.joint_terms(model, data);
            blanket_check("gamma_w", &before, &after, &[Term::Tau, Term::X, Term::Psi, Term::GammaE, Term::Likelihood]);
        }
        let prior_e = model.noise_precision();
        let ss_e: f64 = e.as_slice().iter().map(|v| v * v).sum();
        let shape_e = prior_e.shape + 0.5 * e.as_slice().len() as f64;
        #[cfg(debug_assertions)]
        let before = self.joint_terms(model, data);
        self.gamma_e = finite("gamma_e", gamma_variate(rng, shape_e, prior_e.rate + 0.5 * ss_e))?;
        #[cfg(debug_assertions)]
        {
            let after = self.joint_terms(model, data);
            blanket_check("gamma_e", &before, &after, &[Term::Tau, Term::X, Term::Psi, Term::W, Term::GammaW]);
        }
        Ok(())
    }

    fn update_tau<R: Rng + ?Sized>(&mut self, model: &LinearGaussianModel, rng: &mut R) -> Result<usize> {
        let n = self.n();
        let sums = self.column_sums();
        let mut degenerate = 0;
        match self.kind {
            PriorKind::Aifa => {
                for (t, &s) in self.tau.iter_mut().zip(&sums) {
                    let p = aifa_tau_conditional(model, s, n)?;
                    *t = finite("tau", beta_variate(rng, p.a, p.b))?;
                }
            }
            PriorKind::BondessonTfa => {
                let k = self.k();
                for j in 0..k {
                    let hi = if j == 0 { 1.0 } else { self.tau[j - 1] };
                    let lo = if j + 1 == k { 0.0 } else { self.tau[j + 1] };
                    let p = tfa_tau_parameters(model, j, k, sums[j], n);
                    let draw = sample_truncated_beta(rng, p.a, p.b, lo, hi)?;
                    degenerate += usize::from(draw.degenerate);
                    let v = finite("tau", draw.value)?;
                    self.tau[j] = v.clamp(f64::MIN_POSITIVE.max(lo), (1.0 - f64::EPSILON / 2.0).min(hi));
                }
            }
        }
        Ok(degenerate)
    }

    /// Redraws the features of `rows` only, holding everything else fixed.
    pub(crate) fn update_rows<R: Rng + ?Sized>(&mut self, data: &Matrix, rows: core::ops::Range<usize>, rng: &mut R) -> Result<()> {
        let mut e = self.residuals(data);
        self.update_features(&mut e, rows, rng)
    }

    pub(crate) fn with_rows(&self, x: Matrix<bool>, w: Matrix) -> Self {
        Self {
            x,
            w,
            ..self.clone()
        }
    }
}

/// Shapes of the truncated beta conditional of `τ_j` (zero-based `j`) under the
/// truncation prior with `α = 1`: `(γ·1{j = K-1} + Σx, N - Σx + 1)`.
pub fn tfa_tau_parameters(model: &LinearGaussianModel, j: usize, k: usize, column_sum: usize, n: usize) -> BetaParameters {
    let last = if j + 1 == k { model.gamma() } else { 0.0 };
    BetaParameters {
        a: last + column_sum as f64,
        b: (n - column_sum) as f64 + 1.0,
    }
}

/// Draws a new `τ_j` from its truncated beta conditional, restricted to the
/// interval set by its neighbours. Returns the value and whether the interval
/// was degenerate.
pub fn tfa_tau_conditional_sample<R: Rng + ?Sized>(
    model: &LinearGaussianModel,
    state: &GibbsState,
    j: usize,
    rng: &mut R,
) -> Result<(f64, bool)> {
    if state.kind != PriorKind::BondessonTfa {
        return Err(Error::Unsupported("state does not use the truncation prior"));
    }
    let k = state.k();
    if j >= k {
        return Err(Error::Dimension(alloc::format!("atom {j} out of range for K = {k}")));
    }
    let hi = if j == 0 { 1.0 } else { state.tau[j - 1] };
    let lo = if j + 1 == k { 0.0 } else { state.tau[j + 1] };
    let p = tfa_tau_parameters(model, j, k, state.column_sums()[j], state.n());
    let d = sample_truncated_beta(rng, p.a, p.b, lo, hi)?;
    Ok((d.value, d.degenerate))
}

#[cfg(debug_assertions)]
#[derive(Clone, Copy)]
enum Term {
    Tau,
    X,
    Psi,
    W,
    GammaW,
    GammaE,
    Likelihood,
}

#[cfg(debug_assertions)]
fn blanket_check(block: &str, before: &JointTerms, after: &JointTerms, untouched: &[Term]) {
    for &t in untouched {
        let (a, b, name) = match t {
            Term::Tau => (before.tau, after.tau, "tau"),
            Term::X => (before.x, after.x, "x"),
            Term::Psi => (before.psi, after.psi, "psi"),
            Term::W => (before.w, after.w, "w"),
            Term::GammaW => (before.gamma_w, after.gamma_w, "gamma_w"),
            Term::GammaE => (before.gamma_e, after.gamma_e, "gamma_e"),
            Term::Likelihood => (before.likelihood, after.likelihood, "likelihood"),
        };
        assert!(
            a.to_bits() == b.to_bits(),
            "{block} update changed the {name} term: {a} -> {b}"
        );
    }
}

/// One systematic scan: features `(x, w)`, locations `ψ`, precisions `γ_w`
/// then `γ_e`, then `τ`. With debug assertions on, every block is checked to
/// leave the factors outside its Markov blanket bit-identical.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    model: &LinearGaussianModel,
    state: &mut GibbsState,
    data: &Matrix,
    rng: &mut R,
) -> Result<SweepReport> {
    model.check_kind(state.kind)?;
    model.check_data(data)?;
    if data.rows() != state.n() || state.k() != model.k() {
        return Err(Error::Dimension(alloc::format!(
            "state has {} rows and K = {}, data has {} rows and model K = {}",
            state.n(),
            state.k(),
            data.rows(),
            model.k()
        )));
    }
    let mut e = state.residuals(data);

    #[cfg(debug_assertions)]
    let before = state.joint_terms(model, data);
    state.update_features(&mut e, 0..state.n(), rng)?;
    #[cfg(debug_assertions)]
    {
        let after = state.joint_terms(model, data);
        blanket_check("feature", &before, &after, &[Term::Tau, Term::Psi, Term::GammaW, Term::GammaE]);
    }

    #[cfg(debug_assertions)]
    let before = state.joint_terms(model, data);
    state.update_psi(model, &mut e, rng)?;
    #[cfg(debug_assertions)]
    {
        let after = state.joint_terms(model, data);
        blanket_check("psi", &before, &after, &[Term::Tau, Term::X, Term::W, Term::GammaW, Term::GammaE]);
    }

    state.update_precisions(model, data, &e, rng)?;

    #[cfg(debug_assertions)]
    let before = state.joint_terms(model, data);
    let degenerate_tau = state.update_tau(model, rng)?;
    #[cfg(debug_assertions)]
    {
        let after = state.joint_terms(model, data);
        blanket_check("tau", &before, &after, &[Term::Psi, Term::W, Term::GammaW, Term::GammaE, Term::Likelihood]);
    }
    Ok(SweepReport { degenerate_tau })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::GammaPrior;
    use crate::quadrature::Quadrature;
    use crate::rng::split;
    use crate::stats::{mean, standard_error};

    const PROPER: GammaPrior = GammaPrior { shape: 2.0, rate: 1.0 };

    fn model(k: usize) -> LinearGaussianModel {
        LinearGaussianModel::new(3, 1.0, 1.0, k)
            .unwrap()
            .with_precision_priors(PROPER, PROPER)
            .unwrap()
    }

    #[test]
    fn aifa_conditional_examples() {
        let p = aifa_tau_conditional(&model(10), 2, 3).unwrap();
        assert_eq!((p.a, p.b), (0.1 + 2.0, 2.0));
        let p = aifa_tau_conditional(&model(10), 0, 0).unwrap();
        assert_eq!((p.a, p.b), (0.1, 1.0));
        let m = LinearGaussianModel::new(3, 2.0, 3.0, 4).unwrap();
        let p = aifa_tau_conditional(&m, 7, 7).unwrap();
        assert_eq!((p.a, p.b), (1.5 + 7.0, 3.0));
        assert!(aifa_tau_conditional(&m, 8, 7).is_err());
    }

    #[test]
    fn tfa_single_atom_without_data_is_prior() {
        let m = LinearGaussianModel::new(2, 2.5, 1.0, 1)
            .unwrap()
            .with_precision_priors(PROPER, PROPER)
            .unwrap();
        let mut rng = split(3, 0);
        let state = GibbsState::sample_prior(&m, PriorKind::BondessonTfa, 0, &mut rng).unwrap();
        let xs: Vec<f64> = (0..100_000)
            .map(|_| tfa_tau_conditional_sample(&m, &state, 0, &mut rng).unwrap().0)
            .collect();
        // Beta(2.5, 1) has mean 2.5/3.5
        assert!((mean(&xs) - 2.5 / 3.5).abs() < 3.0 * standard_error(&xs));
    }

    #[test]
    fn tfa_conditional_mean_matches_quadrature() {
        let m = model(3);
        let mut rng = split(4, 0);
        let x = Matrix::from_fn(6, 3, |i, j| (i + j) % 3 == 0);
        let state = GibbsState::new(
            &m,
            PriorKind::BondessonTfa,
            alloc::vec![0.8, 0.4, 0.1],
            Matrix::filled(3, 3, 0.1),
            x,
            Matrix::filled(6, 3, 0.0),
            1.0,
            1.0,
        )
        .unwrap();
        let p = tfa_tau_parameters(&m, 1, 3, state.column_sums()[1], 6);
        let dens = |t: f64| t.powf(p.a - 1.0) * (1.0 - t).powf(p.b - 1.0);
        let q = Quadrature::default();
        let exact = q.integrate(|t| t * dens(t), 0.1, 0.8).unwrap().value / q.integrate(dens, 0.1, 0.8).unwrap().value;
        let xs: Vec<f64> = (0..100_000)
            .map(|_| {
                let v = tfa_tau_conditional_sample(&m, &state, 1, &mut rng).unwrap().0;
                assert!((0.1..=0.8).contains(&v));
                v
            })
            .collect();
        assert!((mean(&xs) - exact).abs() < 3.0 * standard_error(&xs));
    }

    #[test]
    fn ordering_survives_sweeps() {
        let m = model(6);
        let mut rng = split(5, 0);
        let truth = GibbsState::sample_prior(&m.with_precision_priors(
            GammaPrior { shape: 5.0, rate: 5.0 },
            GammaPrior { shape: 5.0, rate: 1.0 },
        ).unwrap(), PriorKind::BondessonTfa, 30, &mut rng).unwrap();
        let data = truth.generate_data(&mut rng);
        let mut state = GibbsState::initialize(&m, PriorKind::BondessonTfa, &data, &mut rng).unwrap();
        for _ in 0..200 {
            gibbs_sweep(&m, &mut state, &data, &mut rng).unwrap();
            assert!(state.tau().windows(2).all(|p| p[0] >= p[1]));
        }
    }

    #[test]
    fn zero_feature_state_draws_priors() {
        // with every x off, psi and w are drawn from their priors
        let m = model(2).with_psi_variance(4.0).unwrap();
        let mut rng = split(6, 0);
        let data = Matrix::filled(5, 3, 0.3);
        let mut psi_draws = Vec::new();
        let mut w_draws = Vec::new();
        for _ in 0..20_000 {
            let mut s = GibbsState::new(
                &m,
                PriorKind::Aifa,
                alloc::vec![1e-300, 1e-300],
                Matrix::filled(2, 3, 0.0),
                Matrix::filled(5, 2, false),
                Matrix::filled(5, 2, 0.0),
                2.0,
                1.0,
            )
            .unwrap();
            let mut e = s.residuals(&data);
            s.update_features(&mut e, 0..5, &mut rng).unwrap();
            assert!(s.x().as_slice().iter().all(|v| !v));
            w_draws.push(s.w()[(0, 0)]);
            s.update_psi(&m, &mut e, &mut rng).unwrap();
            psi_draws.push(s.psi()[(1, 2)]);
        }
        let var = |v: &[f64]| crate::stats::variance(v);
        assert!((var(&psi_draws) - 4.0).abs() < 0.1);
        assert!((var(&w_draws) - 0.5).abs() < 0.015);
    }

    #[test]
    fn joint_density_is_exchangeable_over_atoms() {
        let m = model(5).with_precision_priors(
            GammaPrior { shape: 2.0, rate: 1.0 },
            GammaPrior { shape: 2.0, rate: 1.0 },
        ).unwrap();
        let mut rng = split(7, 0);
        let s = GibbsState::sample_prior(&m, PriorKind::Aifa, 12, &mut rng).unwrap();
        let data = s.generate_data(&mut rng);
        let base = s.joint_log_density(&m, &data);
        for order in [[4, 3, 2, 1, 0], [1, 0, 2, 4, 3], [2, 3, 4, 0, 1]] {
            let p = s.permute_atoms(&m, &order).unwrap();
            assert!((p.joint_log_density(&m, &data) - base).abs() < 1e-10);
        }
        assert!(s.permute_atoms(&m, &[0, 0, 1, 2, 3]).is_err());
    }

    #[test]
    fn sweeps_are_deterministic_and_serializable() {
        let m = model(4);
        let run = || {
            let mut rng = split(8, 0);
            let data = Matrix::from_fn(10, 3, |i, j| ((i * 3 + j) as f64).sin());
            let mut s = GibbsState::initialize(&m, PriorKind::Aifa, &data, &mut rng).unwrap();
            for _ in 0..20 {
                gibbs_sweep(&m, &mut s, &data, &mut rng).unwrap();
            }
            s
        };
        let a = run();
        assert_eq!(a, run());
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<GibbsState>(&json).unwrap(), a);
    }

    #[test]
    fn shape_errors() {
        let m = model(3);
        let mut rng = split(9, 0);
        let s = GibbsState::sample_prior(&m, PriorKind::Aifa, 4, &mut rng).unwrap();
        let mut s2 = s.clone();
        assert!(gibbs_sweep(&m, &mut s2, &Matrix::filled(5, 3, 0.0), &mut rng).is_err());
        assert!(gibbs_sweep(&m, &mut s2, &Matrix::filled(4, 2, 0.0), &mut rng).is_err());
        assert!(GibbsState::new(&m, PriorKind::BondessonTfa, alloc::vec![0.1, 0.5, 0.2], s.psi().clone(), s.x().clone(), s.w().clone(), 1.0, 1.0).is_err());
    }
}
