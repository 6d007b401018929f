//! Per-occasion ranking of a curve set.
//!
//! Each column is ranked across all subjects, ignoring group labels. Ties get
//! mid-ranks (the mean of the integer ranks they span); the underlying model
//! assumes continuous data, so ties are a convention rather than part of it.

use nalgebra::DMatrix;

use crate::curves::CurveSet;
use crate::error::{Error, Result};

/// `n × S` matrix of per-occasion ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct RankCurves {
    ranks: DMatrix<f64>,
}

impl RankCurves {
    /// Wraps an existing rank matrix after checking the column-sum and range
    /// invariants.
    pub fn from_matrix(ranks: DMatrix<f64>) -> Result<Self> {
        let n = ranks.nrows();
        if n == 0 || ranks.ncols() == 0 {
            return Err(Error::invalid("rank matrix must be non-empty"));
        }
        let nf = n as f64;
        let expected = nf * (nf + 1.0) / 2.0;
        for (j, col) in ranks.column_iter().enumerate() {
            if col.iter().any(|&r| !(1.0..=nf).contains(&r)) {
                return Err(Error::invalid(format!(
                    "column {j} has ranks outside [1, {n}]"
                )));
            }
            let sum: f64 = col.iter().sum();
            if (sum - expected).abs() > 1e-9 * expected {
                return Err(Error::invalid(format!(
                    "column {j} sums to {sum}, expected {expected}"
                )));
            }
        }
        Ok(Self { ranks })
    }

    pub fn ranks(&self) -> &DMatrix<f64> {
        &self.ranks
    }

    pub fn n(&self) -> usize {
        self.ranks.nrows()
    }

    pub fn grid_len(&self) -> usize {
        self.ranks.ncols()
    }

    /// Rank curve of subject `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.ranks.ncols()).map(move |j| self.ranks[(i, j)])
    }
}

/// Mid-ranks of `values` (1-based).
pub fn rank_vector(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::invalid("cannot rank an empty vector"));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite value at position {i}")));
    }
    Ok(mid_ranks(values))
}

/// Mid-ranks for finite input, no validation.
pub(crate) fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// Sizes of the tie blocks in `values` (blocks of size 1 included).
pub(crate) fn tie_block_sizes(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        sizes.push(j - i);
        i = j;
    }
    sizes
}

/// Ranks every column of the curve matrix across subjects.
pub fn rank_curves(curves: &CurveSet) -> Result<RankCurves> {
    let values = curves.values();
    let (n, s) = values.shape();
    let mut ranks = DMatrix::zeros(n, s);
    for (j, col) in values.column_iter().enumerate() {
        let r = rank_vector(col.as_slice())?;
        ranks.column_mut(j).copy_from_slice(&r);
    }
    Ok(RankCurves { ranks })
}
