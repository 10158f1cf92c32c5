//! Blackwell–MacQueen and finite symmetric Dirichlet urns.
//!
//! Histories are label sequences with blocks numbered `0, 1, …` in order of
//! first appearance.

use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::rng::categorical;

/// Outcome of one urn step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UrnLabel {
    Existing(usize),
    Fresh,
}

/// Urn scheme of a Dirichlet process or of its finite symmetric approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "urn", rename_all = "snake_case", deny_unknown_fields)]
pub enum Urn {
    Dp {
        alpha: f64,
    },
    Fsd {
        alpha: f64,
        #[serde(rename = "K")]
        k: usize,
    },
}

/// Probabilities of each existing block and of a fresh one.
#[derive(Debug, Clone, PartialEq)]
pub struct UrnProbabilities {
    pub existing: Vec<f64>,
    pub fresh: f64,
}

impl Urn {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Urn::Dp { alpha } => positive("alpha", alpha).map(|_| ()),
            Urn::Fsd { alpha, k } => {
                positive("alpha", alpha)?;
                if k == 0 {
                    return Err(Error::InvalidParameter {
                        name: "K",
                        value: 0.0,
                        reason: "must be at least 1",
                    });
                }
                Ok(())
            }
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            Urn::Dp { alpha } | Urn::Fsd { alpha, .. } => alpha,
        }
    }

    /// Predictive probabilities given block sizes.
    pub fn probabilities(&self, counts: &[u64]) -> Result<UrnProbabilities> {
        self.validate()?;
        let n1: f64 = counts.iter().sum::<u64>() as f64;
        let alpha = self.alpha();
        let denom = n1 + alpha;
        Ok(match *self {
            Urn::Dp { .. } => UrnProbabilities {
                existing: counts.iter().map(|&c| c as f64 / denom).collect(),
                fresh: alpha / denom,
            },
            Urn::Fsd { k, .. } => {
                if counts.len() > k {
                    return Err(Error::Domain {
                        what: "occupied blocks",
                        value: counts.len() as f64,
                        reason: "exceed K",
                    });
                }
                let a = alpha / k as f64;
                UrnProbabilities {
                    existing: counts.iter().map(|&c| (c as f64 + a) / denom).collect(),
                    fresh: (k - counts.len()) as f64 * a / denom,
                }
            }
        })
    }

    pub fn step<R: Rng + ?Sized>(&self, counts: &[u64], rng: &mut R) -> Result<UrnLabel> {
        let p = self.probabilities(counts)?;
        let mut w = p.existing;
        w.push(p.fresh);
        let i = categorical(rng, &w);
        Ok(if i == counts.len() {
            UrnLabel::Fresh
        } else {
            UrnLabel::Existing(i)
        })
    }

    /// Label sequence of length `n`.
    pub fn sample_labels<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        let mut counts: Vec<u64> = Vec::new();
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let l = match self.step(&counts, rng)? {
                UrnLabel::Existing(i) => i,
                UrnLabel::Fresh => {
                    counts.push(0);
                    counts.len() - 1
                }
            };
            counts[l] += 1;
            labels.push(l);
        }
        Ok(labels)
    }
}

/// Block sizes of a label history.
pub fn block_counts(labels: &[usize]) -> Result<Vec<u64>> {
    let mut counts: Vec<u64> = Vec::new();
    for &l in labels {
        match l.cmp(&counts.len()) {
            core::cmp::Ordering::Less => counts[l] += 1,
            core::cmp::Ordering::Equal => counts.push(1),
            core::cmp::Ordering::Greater => {
                return Err(Error::Domain {
                    what: "label",
                    value: l as f64,
                    reason: "blocks must be numbered in order of first appearance",
                })
            }
        }
    }
    Ok(counts)
}

pub fn dp_urn_probabilities(labels: &[usize], alpha: f64) -> Result<UrnProbabilities> {
    Urn::Dp { alpha }.probabilities(&block_counts(labels)?)
}

pub fn fsd_urn_probabilities(labels: &[usize], alpha: f64, k: usize) -> Result<UrnProbabilities> {
    Urn::Fsd { alpha, k }.probabilities(&block_counts(labels)?)
}

pub fn dp_urn_step<R: Rng + ?Sized>(labels: &[usize], alpha: f64, rng: &mut R) -> Result<UrnLabel> {
    Urn::Dp { alpha }.step(&block_counts(labels)?, rng)
}

pub fn fsd_urn_step<R: Rng + ?Sized>(
    labels: &[usize],
    alpha: f64,
    k: usize,
    rng: &mut R,
) -> Result<UrnLabel> {
    Urn::Fsd { alpha, k }.step(&block_counts(labels)?, rng)
}

/// `P(second draw joins the first)` under each urn.
pub fn pair_coincidence(urn: &Urn) -> Result<f64> {
    Ok(urn.probabilities(&[1])?.existing[0])
}
