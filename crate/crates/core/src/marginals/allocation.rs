//! Feature-allocation matrices and their simulation under target and approximate marginals.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{check_k, ExpFamilyModel};
use crate::error::{Error, Result};
use crate::rng::{binomial, poisson};
use crate::special::ln_factorial;

/// Trait counts by observation (row) and instantiated atom (column).
///
/// Columns are ordered by first-appearance row, then by descending count in
/// that row, then by creation order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DenseAllocation", into = "DenseAllocation")]
pub struct FeatureAllocation {
    rows: usize,
    columns: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DenseAllocation {
    rows: usize,
    columns: usize,
    counts: Vec<Vec<u64>>,
}

impl FeatureAllocation {
    pub fn empty(rows: usize) -> Self {
        Self {
            rows,
            columns: Vec::new(),
        }
    }

    /// Builds from columns in creation order and sorts them into canonical order.
    pub fn from_columns(rows: usize, columns: Vec<Vec<u64>>) -> Result<Self> {
        for c in &columns {
            if c.len() != rows {
                return Err(Error::Dimension(alloc::format!(
                    "column of length {} in a matrix with {} rows",
                    c.len(),
                    rows
                )));
            }
            if c.iter().all(|&x| x == 0) {
                return Err(Error::Empty("feature-allocation column"));
            }
        }
        let mut out = Self { rows, columns };
        out.canonicalize();
        Ok(out)
    }

    /// Builds from a row-major matrix.
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let columns = (0..width)
            .map(|j| rows.iter().map(|r| r[j]).collect())
            .collect();
        Self::from_columns(rows.len(), columns)
    }

    /// Builds from `(row, col, count)` triplets; zero counts are ignored.
    pub fn from_triplets(rows: usize, triplets: &[(usize, usize, u64)]) -> Result<Self> {
        let width = triplets.iter().map(|t| t.1 + 1).max().unwrap_or(0);
        let mut columns = vec![vec![0u64; rows]; width];
        for &(r, c, x) in triplets {
            if r >= rows {
                return Err(Error::Dimension(alloc::format!("row {r} out of range")));
            }
            columns[c][r] = x;
        }
        Self::from_columns(rows, columns)
    }

    fn canonicalize(&mut self) {
        let key = |c: &Vec<u64>| {
            let first = c.iter().position(|&x| x > 0).unwrap_or(usize::MAX);
            (first, core::cmp::Reverse(c.get(first).copied().unwrap_or(0)))
        };
        self.columns.sort_by_key(key);
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.columns[col][row]
    }

    pub fn column(&self, col: usize) -> &[u64] {
        &self.columns[col]
    }

    pub fn row(&self, row: usize) -> Vec<u64> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    /// Row of first appearance per column.
    pub fn first_rows(&self) -> Vec<usize> {
        self.columns
            .iter()
            .map(|c| c.iter().position(|&x| x > 0).expect("nonzero column"))
            .collect()
    }

    /// Nonzero `(row, col, count)` triplets, row-major.
    pub fn triplets(&self) -> Vec<(usize, usize, u64)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for (c, col) in self.columns.iter().enumerate() {
                if col[r] > 0 {
                    out.push((r, c, col[r]));
                }
            }
        }
        out
    }

    /// Sparse CSV with header `row,col,count`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("row,col,count\n");
        for (r, c, x) in self.triplets() {
            s.push_str(&alloc::format!("{r},{c},{x}\n"));
        }
        s
    }

    /// New matrix whose row `i` is row `order[i]` of this one.
    pub fn permute_rows(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.rows];
        if order.len() != self.rows {
            return Err(Error::Dimension("permutation length".into()));
        }
        for &i in order {
            if i >= self.rows || core::mem::replace(&mut seen[i], true) {
                return Err(Error::Dimension("not a permutation".into()));
            }
        }
        let columns = self
            .columns
            .iter()
            .map(|c| order.iter().map(|&i| c[i]).collect())
            .collect();
        Self::from_columns(self.rows, columns)
    }
}

impl TryFrom<DenseAllocation> for FeatureAllocation {
    type Error = Error;

    fn try_from(d: DenseAllocation) -> Result<Self> {
        if d.counts.len() != d.rows || d.counts.iter().any(|r| r.len() != d.columns) {
            return Err(Error::Dimension("dense counts disagree with shape".into()));
        }
        if d.rows == 0 {
            return Ok(Self::empty(0));
        }
        Self::from_rows(&d.counts)
    }
}

impl From<FeatureAllocation> for DenseAllocation {
    fn from(f: FeatureAllocation) -> Self {
        DenseAllocation {
            rows: f.rows,
            columns: f.columns.len(),
            counts: f.to_rows(),
        }
    }
}

/// Which marginal process generates the allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum AllocationSource {
    Target,
    Aifa {
        #[serde(rename = "K")]
        k: usize,
    },
}

/// Simulates `rows` rounds of the chosen marginal process.
pub fn simulate_allocation<R: Rng + ?Sized>(
    model: &ExpFamilyModel,
    rows: usize,
    source: AllocationSource,
    rng: &mut R,
) -> Result<FeatureAllocation> {
    if rows == 0 {
        return Err(Error::Empty("rows"));
    }
    if let AllocationSource::Aifa { k } = source {
        check_k(k)?;
    }
    let mut columns: Vec<Vec<u64>> = Vec::new();
    let mut totals: Vec<u64> = Vec::new();
    for row in 0..rows {
        let n = row as u64 + 1;
        for (col, total) in columns.iter_mut().zip(totals.iter_mut()) {
            let x = match source {
                AllocationSource::Target => model.sample_target(rng, n, *total)?,
                AllocationSource::Aifa { k } => model.sample_approx(rng, k, n, *total)?,
            };
            col.push(x);
            *total += x;
        }
        let fresh: Vec<u64> = match source {
            AllocationSource::Target => {
                let count = poisson(rng, model.total_new_atom_rate(n)?);
                (0..count)
                    .map(|_| model.sample_new_atom_size(rng, n))
                    .collect::<Result<_>>()?
            }
            AllocationSource::Aifa { k } => {
                let dormant = (k - columns.len()) as u64;
                let count = binomial(rng, dormant, model.approx_activation(k, n)?);
                (0..count)
                    .map(|_| model.sample_approx_activated(rng, k, n))
                    .collect::<Result<_>>()?
            }
        };
        for x in fresh {
            let mut col = vec![0u64; row];
            col.push(x);
            columns.push(col);
            totals.push(x);
        }
    }
    FeatureAllocation::from_columns(rows, columns)
}

/// Log-probability of the row-by-row history under the target process:
/// existing atoms by their predictive pmfs and, per round, the Poisson counts of
/// new atoms of each size.
pub fn chained_log_probability(model: &ExpFamilyModel, alloc: &FeatureAllocation) -> Result<f64> {
    let first = alloc.first_rows();
    let mut totals = vec![0u64; alloc.n_columns()];
    let mut lp = 0.0;
    for row in 0..alloc.n_rows() {
        let n = row as u64 + 1;
        let mut fresh: BTreeMap<u64, u64> = BTreeMap::new();
        for (c, &f) in first.iter().enumerate() {
            let x = alloc.get(row, c);
            model.check_count(x)?;
            if f < row {
                lp += model.target_ln_pmf(n, totals[c], x)?;
            } else if f == row {
                *fresh.entry(x).or_insert(0) += 1;
            }
            totals[c] += x;
        }
        lp -= model.total_new_atom_rate(n)?;
        for (&x, &m) in &fresh {
            lp += m as f64 * model.ln_new_atom_rate(n, x)? - ln_factorial(m);
        }
    }
    Ok(lp)
}

/// Log-probability of the allocation up to a reordering of its columns.
///
/// Equals the chained value plus `Σ ln m_{n,x}!` over rounds and new-atom sizes,
/// minus `Σ ln K_h!` over groups of identical columns; invariant to row order.
pub fn class_log_probability(model: &ExpFamilyModel, alloc: &FeatureAllocation) -> Result<f64> {
    let mut lp = chained_log_probability(model, alloc)?;
    let first = alloc.first_rows();
    let mut fresh: BTreeMap<(usize, u64), u64> = BTreeMap::new();
    let mut groups: BTreeMap<&[u64], u64> = BTreeMap::new();
    for (c, &f) in first.iter().enumerate() {
        *fresh.entry((f, alloc.get(f, c))).or_insert(0) += 1;
        *groups.entry(alloc.column(c)).or_insert(0) += 1;
    }
    lp += fresh.values().map(|&m| ln_factorial(m)).sum::<f64>();
    lp -= groups.values().map(|&m| ln_factorial(m)).sum::<f64>();
    Ok(lp)
}
