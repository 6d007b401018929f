use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A set of `n` complete curves sampled on a shared grid of `S` occasions,
/// each carrying a group label in `1..=G`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet {
    values: DMatrix<f64>,
    grid: Vec<f64>,
    groups: Vec<usize>,
    group_count: usize,
}

impl CurveSet {
    /// Builds a curve set from an `n × S` matrix (rows are subjects).
    pub fn new(values: DMatrix<f64>, grid: Vec<f64>, groups: Vec<usize>) -> Result<Self> {
        let (n, s) = values.shape();
        if n < 2 {
            return Err(Error::invalid(format!("need at least 2 curves, got {n}")));
        }
        if s == 0 {
            return Err(Error::invalid("grid must contain at least one occasion"));
        }
        if grid.len() != s {
            return Err(Error::invalid(format!(
                "grid has {} points but the value matrix has {s} columns",
                grid.len()
            )));
        }
        if groups.len() != n {
            return Err(Error::invalid(format!(
                "{} group labels for {n} curves",
                groups.len()
            )));
        }
        if !grid.iter().all(|g| g.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "grid must be finite and strictly increasing",
            ));
        }
        if let Some((idx, _)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let (row, col) = (idx % n, idx / n);
            return Err(Error::invalid(format!(
                "non-finite value at curve {row}, occasion {col}"
            )));
        }
        let group_count = groups.iter().copied().max().unwrap_or(0);
        if groups.contains(&0) {
            return Err(Error::invalid("group labels start at 1"));
        }
        if group_count < 2 {
            return Err(Error::invalid("need at least 2 groups"));
        }
        let mut seen = vec![false; group_count];
        for &g in &groups {
            seen[g - 1] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!(
                "group label {} has no curves",
                missing + 1
            )));
        }
        Ok(Self {
            values,
            grid,
            groups,
            group_count,
        })
    }

    /// Builds a curve set from row vectors.
    pub fn from_rows(rows: &[Vec<f64>], grid: Vec<f64>, groups: Vec<usize>) -> Result<Self> {
        let s = grid.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != s) {
            return Err(Error::invalid(format!(
                "curve {bad} has {} values, expected {s}",
                rows[bad].len()
            )));
        }
        let values = DMatrix::from_fn(rows.len(), s, |i, j| rows[i][j]);
        Self::new(values, grid, groups)
    }

    /// Same grid and labels, new values.
    pub fn with_values(&self, values: DMatrix<f64>) -> Result<Self> {
        Self::new(values, self.grid.clone(), self.groups.clone())
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    /// Number of curves.
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Number of occasions on the grid.
    pub fn grid_len(&self) -> usize {
        self.values.ncols()
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.group_count];
        for &g in &self.groups {
            sizes[g - 1] += 1;
        }
        sizes
    }

    /// Splits per-curve scores into one vector per group, in label order.
    pub fn split_by_group(&self, scores: &[f64]) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.group_count];
        for (&g, &v) in self.groups.iter().zip(scores) {
            out[g - 1].push(v);
        }
        out
    }
}
