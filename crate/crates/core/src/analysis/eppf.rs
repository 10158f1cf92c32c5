//! Exchangeable partition probabilities under Dirichlet-process, finite symmetric
//! Dirichlet and normalized AIFA weights.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::approximations::{AifaConfig, FiniteSymmetricDirichlet, WeightDistribution, WeightSampler};
use crate::error::{positive, Error, Result};
use crate::marginals::{block_counts, Urn};
use crate::rng::ln_beta_variate;
use crate::special::{ln_factorial, log_sum_exp};

/// Remaining stick mass below which Dirichlet-process stick-breaking stops.
const STICK_REMAINDER: f64 = 1e-12;

/// Minimum number of hits for a Monte-Carlo estimate to count as resolved.
const MIN_HITS: u64 = 10;

/// Block sizes `n₁ ≥ n₂ ≥ … ≥ n_b ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct PartitionComposition {
    sizes: Vec<usize>,
}

impl PartitionComposition {
    /// Sorts the sizes into descending order.
    pub fn new(mut sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::Empty("composition"));
        }
        if sizes.contains(&0) {
            return Err(Error::Domain {
                what: "block size",
                value: 0.0,
                reason: "blocks are nonempty",
            });
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { sizes })
    }

    /// Composition induced by a label sequence.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &l in labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        Self::new(counts.into_values().collect())
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn blocks(&self) -> usize {
        self.sizes.len()
    }

    /// Restricted-growth labels: every block opened in order, then each block's
    /// remaining members appended block by block.
    pub fn canonical_labels(&self) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.blocks()).collect();
        for (b, &s) in self.sizes.iter().enumerate() {
            out.extend(core::iter::repeat_n(b, s - 1));
        }
        out
    }

    /// `ln` of the number of set partitions of `{1..N}` with these block sizes,
    /// `N! / (Π n_i! Π_j m_j!)` with `m_j` the multiplicity of size `j`.
    pub fn ln_set_partition_count(&self) -> f64 {
        let mut ln = ln_factorial(self.n() as u64);
        let mut mult: BTreeMap<usize, u64> = BTreeMap::new();
        for &s in &self.sizes {
            ln -= ln_factorial(s as u64);
            *mult.entry(s).or_insert(0) += 1;
        }
        ln - mult.values().map(|&m| ln_factorial(m)).sum::<f64>()
    }

    /// Every composition of `n`, in descending lexicographic order.
    pub fn all(n: usize) -> Vec<Self> {
        fn rec(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<PartitionComposition>) {
            if rest == 0 {
                out.push(PartitionComposition { sizes: cur.clone() });
                return;
            }
            for s in (1..=rest.min(max)).rev() {
                cur.push(s);
                rec(rest - s, s, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        if n > 0 {
            rec(n, n, &mut Vec::new(), &mut out);
        }
        out
    }
}

impl fmt::Display for PartitionComposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sizes.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for PartitionComposition {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PartitionComposition> for Vec<usize> {
    fn from(c: PartitionComposition) -> Self {
        c.sizes
    }
}

/// Random probability measure whose partition probabilities are wanted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum EppfSource {
    Dp {
        alpha: f64,
    },
    Fsd {
        gamma: f64,
        #[serde(rename = "K")]
        k: usize,
    },
    NormalizedAifa {
        aifa: AifaConfig,
    },
}

impl EppfSource {
    /// Urn of the source, when it has one.
    pub fn urn(&self) -> Option<Urn> {
        match *self {
            EppfSource::Dp { alpha } => Some(Urn::Dp { alpha }),
            EppfSource::Fsd { gamma, k } => Some(Urn::Fsd { alpha: gamma, k }),
            EppfSource::NormalizedAifa { .. } => None,
        }
    }

    /// Prepares a sampler of normalized weights.
    pub fn weight_sampler(&self) -> Result<NormalizedWeights> {
        Ok(match self {
            EppfSource::Dp { alpha } => {
                positive("alpha", *alpha)?;
                NormalizedWeights::StickBreaking { alpha: *alpha }
            }
            EppfSource::Fsd { gamma, k } => {
                NormalizedWeights::Dirichlet(FiniteSymmetricDirichlet::new(*gamma, *k)?)
            }
            EppfSource::NormalizedAifa { aifa } => {
                NormalizedWeights::Normalized(WeightDistribution::AifaNumeric(*aifa).prepare()?)
            }
        })
    }
}

/// Samplers of probability vectors.
#[derive(Debug, Clone)]
pub enum NormalizedWeights {
    /// Dirichlet-process stick-breaking run until the remaining stick is below `1e-12`;
    /// the remainder becomes one last atom.
    StickBreaking { alpha: f64 },
    Dirichlet(FiniteSymmetricDirichlet),
    Normalized(WeightSampler),
}

impl NormalizedWeights {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            NormalizedWeights::StickBreaking { alpha } => {
                let mut ln_rest = 0.0f64;
                let mut out = Vec::new();
                while ln_rest.exp() > STICK_REMAINDER {
                    let (ln_v, ln_1mv) = ln_beta_variate(rng, 1.0, *alpha);
                    out.push((ln_rest + ln_v).exp());
                    ln_rest += ln_1mv;
                }
                out.push(ln_rest.exp());
                out
            }
            NormalizedWeights::Dirichlet(d) => d.sample(rng),
            NormalizedWeights::Normalized(s) => {
                let w = s.sample(rng);
                let ln: Vec<f64> = w.iter().map(|x| x.ln()).collect();
                let total = log_sum_exp(&ln);
                ln.iter().map(|l| (l - total).exp()).collect()
            }
        }
    }
}

/// How to compute a partition probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum EppfMethod {
    ExactSequential,
    MonteCarlo { reps: u64 },
}

/// A partition probability with its Monte-Carlo error, zero for exact methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EppfEstimate {
    pub probability: f64,
    pub standard_error: f64,
    /// False when too few Monte-Carlo hits were seen to resolve the probability.
    pub resolved: bool,
}

impl EppfEstimate {
    fn exact(p: f64) -> Self {
        Self {
            probability: p,
            standard_error: 0.0,
            resolved: true,
        }
    }
}

/// Probability of a restricted-growth label sequence under an urn.
pub fn sequence_probability(urn: &Urn, labels: &[usize]) -> Result<f64> {
    block_counts(labels)?;
    let mut counts: Vec<u64> = Vec::new();
    let mut ln_p = 0.0;
    for &l in labels {
        let probs = urn.probabilities(&counts)?;
        let p = if l == counts.len() {
            counts.push(0);
            probs.fresh
        } else {
            probs.existing[l]
        };
        if p == 0.0 {
            return Ok(0.0);
        }
        ln_p += p.ln();
        counts[l] += 1;
    }
    Ok(ln_p.exp())
}

/// Probability that `N = Σ n_i` draws induce one specific set partition with
/// block sizes `comp`.
pub fn eppf<R: Rng + ?Sized>(
    source: &EppfSource,
    comp: &PartitionComposition,
    method: EppfMethod,
    rng: &mut R,
) -> Result<EppfEstimate> {
    match method {
        EppfMethod::ExactSequential => {
            let urn = source.urn().ok_or(Error::Unsupported(
                "exact sequential probabilities need an urn scheme",
            ))?;
            Ok(EppfEstimate::exact(sequence_probability(&urn, &comp.canonical_labels())?))
        }
        EppfMethod::MonteCarlo { reps } => {
            let all = eppf_monte_carlo_all(source, comp.n(), reps, rng)?;
            Ok(all
                .into_iter()
                .find(|(c, _)| c == comp)
                .map(|(_, e)| e)
                .expect("every composition of N is listed"))
        }
    }
}

/// Monte-Carlo partition probabilities for every composition of `n`, from one
/// shared set of replicates.
pub fn eppf_monte_carlo_all<R: Rng + ?Sized>(
    source: &EppfSource,
    n: usize,
    reps: u64,
    rng: &mut R,
) -> Result<Vec<(PartitionComposition, EppfEstimate)>> {
    if n == 0 {
        return Err(Error::Empty("N"));
    }
    if reps == 0 {
        return Err(Error::Empty("replicates"));
    }
    let sampler = source.weight_sampler()?;
    let mut hits: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    let mut cum = Vec::new();
    let mut labels = Vec::with_capacity(n);
    for _ in 0..reps {
        let w = sampler.sample(rng);
        cum.clear();
        let mut acc = 0.0;
        for x in &w {
            acc += x;
            cum.push(acc);
        }
        labels.clear();
        for _ in 0..n {
            let u = rng.random::<f64>() * acc;
            labels.push(cum.partition_point(|&c| c <= u).min(w.len() - 1));
        }
        let comp = PartitionComposition::from_labels(&labels)?;
        *hits.entry(comp.sizes).or_insert(0) += 1;
    }
    Ok(PartitionComposition::all(n)
        .into_iter()
        .map(|c| {
            let h = hits.get(&c.sizes).copied().unwrap_or(0);
            let f = h as f64 / reps as f64;
            let scale = (-c.ln_set_partition_count()).exp();
            let est = EppfEstimate {
                probability: f * scale,
                standard_error: (f * (1.0 - f) / reps as f64).sqrt() * scale,
                resolved: h >= MIN_HITS,
            };
            (c, est)
        })
        .collect())
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EppfGap {
    #[serde(rename = "K")]
    pub k: usize,
    pub composition: String,
    pub p_k: f64,
    pub p_target: f64,
    pub abs_gap: f64,
}

/// `|p_K - p_DP|` for every composition of `n` and every `K`, with `FSD(α, K)`
/// against `DP(α)`.
pub fn fsd_convergence(alpha: f64, n: usize, ks: &[usize]) -> Result<Vec<EppfGap>> {
    let target = Urn::Dp { alpha };
    let mut out = Vec::new();
    for comp in PartitionComposition::all(n) {
        let labels = comp.canonical_labels();
        let p_target = sequence_probability(&target, &labels)?;
        for &k in ks {
            let p_k = sequence_probability(&Urn::Fsd { alpha, k }, &labels)?;
            out.push(EppfGap {
                k,
                composition: alloc::format!("{comp}"),
                p_k,
                p_target,
                abs_gap: (p_k - p_target).abs(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::split;
    use alloc::vec;

    fn exact(source: &EppfSource, comp: &PartitionComposition) -> f64 {
        eppf(source, comp, EppfMethod::ExactSequential, &mut split(0, 0))
            .unwrap()
            .probability
    }

    #[test]
    fn examples() {
        let one = PartitionComposition::new(vec![1]).unwrap();
        assert_eq!(exact(&EppfSource::Dp { alpha: 2.3 }, &one), 1.0);
        let pair = PartitionComposition::new(vec![1, 1]).unwrap();
        assert!((exact(&EppfSource::Fsd { gamma: 1.0, k: 2 }, &pair) - 0.25).abs() < 1e-15);
        assert_eq!(exact(&EppfSource::Fsd { gamma: 3.0, k: 1 }, &pair), 0.0);
    }

    #[test]
    fn compositions() {
        let c4 = PartitionComposition::all(4);
        let sizes: Vec<Vec<usize>> = c4.iter().map(|c| c.sizes().to_vec()).collect();
        assert_eq!(
            sizes,
            vec![vec![4], vec![3, 1], vec![2, 2], vec![2, 1, 1], vec![1, 1, 1, 1]]
        );
        // Bell numbers
        for (n, bell) in [(1usize, 1.0f64), (3, 5.0), (4, 15.0), (5, 52.0)] {
            let total: f64 = PartitionComposition::all(n)
                .iter()
                .map(|c| c.ln_set_partition_count().exp())
                .sum();
            assert!((total - bell).abs() < 1e-9, "{n}");
        }
        let c = PartitionComposition::new(vec![1, 3, 2]).unwrap();
        assert_eq!(c.sizes(), &[3, 2, 1]);
        assert_eq!(c.canonical_labels(), vec![0, 1, 2, 0, 0, 1]);
        assert_eq!(alloc::format!("{c}"), "3+2+1");
    }

    #[test]
    fn lattice_normalization() {
        for source in [
            EppfSource::Dp { alpha: 0.7 },
            EppfSource::Fsd { gamma: 1.3, k: 3 },
            EppfSource::Fsd { gamma: 2.0, k: 50 },
        ] {
            for n in 1..=5 {
                let total: f64 = PartitionComposition::all(n)
                    .iter()
                    .map(|c| exact(&source, c) * c.ln_set_partition_count().exp())
                    .sum();
                assert!((total - 1.0).abs() < 1e-10, "{source:?} {n}");
            }
        }
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let urn = Urn::Fsd { alpha: 1.5, k: 6 };
        let base = sequence_probability(&urn, &[0, 1, 2, 0, 0, 1]).unwrap();
        for seq in [[0, 0, 1, 0, 2, 1], [0, 1, 1, 0, 2, 0], [0, 0, 0, 1, 1, 2]] {
            let p = sequence_probability(&urn, &seq).unwrap();
            assert!((p - base).abs() < 1e-12, "{seq:?}");
        }
    }

    #[test]
    fn dp_matches_product_formula() {
        // the product formula α^{b} Π (n_i - 1)! / (α)_N, used only as a cross-check
        let alpha = 0.8f64;
        for comp in PartitionComposition::all(5) {
            let b = comp.blocks() as i32;
            let num: f64 = comp
                .sizes()
                .iter()
                .map(|&s| ln_factorial(s as u64 - 1))
                .sum::<f64>()
                + b as f64 * alpha.ln();
            let rising: f64 = (0..5).map(|i| (alpha + i as f64).ln()).sum();
            let p = exact(&EppfSource::Dp { alpha }, &comp);
            assert!((p - (num - rising).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn convergence_gap_shrinks() {
        let rows = fsd_convergence(1.0, 4, &[4, 16, 64, 256]).unwrap();
        for chunk in rows.chunks(4) {
            assert!(chunk.windows(2).all(|w| w[1].abs_gap < w[0].abs_gap));
        }
    }
}
