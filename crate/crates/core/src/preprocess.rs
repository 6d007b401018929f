//! Truncated functional principal component smoothing.
//!
//! Stands in for sandwich-smoother FACE: the curve matrix is centred by the
//! cross-subject mean curve, decomposed by SVD, and reconstructed from the
//! fewest leading components whose cumulative share of the squared singular
//! values reaches the requested proportion of variance explained (pve).
//! Group labels are never consulted.

use nalgebra::{DMatrix, DVector};

use crate::curves::CurveSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FpcaResult {
    pub smoothed: DMatrix<f64>,
    pub mean_curve: DVector<f64>,
    pub components_kept: usize,
    pub pve_achieved: f64,
}

impl FpcaResult {
    /// Smoothed values with the grid and labels of `source`.
    pub fn into_curves(self, source: &CurveSet) -> Result<CurveSet> {
        source.with_values(self.smoothed)
    }
}

/// Smallest count `k ≥ 1` with cumulative ratio ≥ `pve`, and that ratio.
pub(crate) fn components_for(sq_singular: &[f64], pve: f64) -> (usize, f64) {
    let total: f64 = sq_singular.iter().sum();
    if total <= 0.0 {
        return (1, 1.0);
    }
    let mut acc = 0.0;
    for (k, &v) in sq_singular.iter().enumerate() {
        acc += v;
        let ratio = acc / total;
        if ratio >= pve {
            return (k + 1, ratio.min(1.0));
        }
    }
    (sq_singular.len(), 1.0)
}

/// Centred SVD with components ordered by decreasing singular value.
struct CentredSvd {
    mean_curve: DVector<f64>,
    /// `(σ, u, vᵀ)` per component.
    components: Vec<(f64, DVector<f64>, nalgebra::RowDVector<f64>)>,
}

fn centred_svd(curves: &CurveSet) -> Result<CentredSvd> {
    let values = curves.values();
    if values.nrows() < 2 {
        return Err(Error::invalid("FPCA needs at least 2 curves"));
    }
    let mean_curve = values.row_mean().transpose();
    let mut centred = values.clone();
    for mut row in centred.row_iter_mut() {
        row -= mean_curve.transpose();
    }
    let svd = centred.svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut components: Vec<_> = (0..svd.singular_values.len())
        .map(|i| {
            (
                svd.singular_values[i],
                u.column(i).into_owned(),
                v_t.row(i).into_owned(),
            )
        })
        .collect();
    components.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(CentredSvd {
        mean_curve,
        components,
    })
}

fn reconstruct(curves: &CurveSet, svd: &CentredSvd, kept: usize) -> DMatrix<f64> {
    let (n, s) = curves.values().shape();
    let mut smoothed = DMatrix::zeros(n, s);
    for (sigma, u, v_t) in &svd.components[..kept] {
        smoothed += (u * *sigma) * v_t;
    }
    for mut row in smoothed.row_iter_mut() {
        row += svd.mean_curve.transpose();
    }
    smoothed
}

fn share(svd: &CentredSvd, kept: usize) -> f64 {
    let sq: Vec<f64> = svd.components.iter().map(|c| c.0 * c.0).collect();
    let total: f64 = sq.iter().sum();
    if total <= 0.0 {
        1.0
    } else {
        (sq[..kept].iter().sum::<f64>() / total).min(1.0)
    }
}

/// Keeps the fewest leading components reaching `pve`.
pub fn fpca_smooth(curves: &CurveSet, pve: f64) -> Result<FpcaResult> {
    if !(pve > 0.0 && pve <= 1.0) {
        return Err(Error::invalid(format!("pve must be in (0, 1], got {pve}")));
    }
    let svd = centred_svd(curves)?;
    let sq: Vec<f64> = svd.components.iter().map(|c| c.0 * c.0).collect();
    let (kept, achieved) = components_for(&sq, pve);
    if kept == sq.len() || pve >= 1.0 {
        return Ok(FpcaResult {
            smoothed: curves.values().clone(),
            mean_curve: svd.mean_curve,
            components_kept: sq.len().max(1),
            pve_achieved: 1.0,
        });
    }
    Ok(FpcaResult {
        smoothed: reconstruct(curves, &svd, kept),
        mean_curve: svd.mean_curve.clone(),
        components_kept: kept,
        pve_achieved: achieved,
    })
}

/// Keeps exactly `components` leading components (capped at the rank bound
/// `min(n, S)`).
pub fn fpca_project(curves: &CurveSet, components: usize) -> Result<FpcaResult> {
    if components == 0 {
        return Err(Error::invalid("must keep at least one component"));
    }
    let svd = centred_svd(curves)?;
    let kept = components.min(svd.components.len());
    Ok(FpcaResult {
        smoothed: reconstruct(curves, &svd, kept),
        mean_curve: svd.mean_curve.clone(),
        components_kept: kept,
        pve_achieved: share(&svd, kept),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn curves_from(values: DMatrix<f64>) -> CurveSet {
        let n = values.nrows();
        let s = values.ncols();
        let grid = (0..s).map(|j| j as f64 / s as f64).collect();
        let groups = (0..n).map(|i| 1 + i % 2).collect();
        CurveSet::new(values, grid, groups).unwrap()
    }

    #[test]
    fn rank_one_data_keeps_one_component() {
        let s = 30;
        let shape: Vec<f64> = (0..s).map(|j| (j as f64 * 0.3).sin()).collect();
        let base: Vec<f64> = (0..s).map(|j| j as f64 * 0.1).collect();
        let scales = [0.5, -1.2, 2.0, 0.1, -0.7, 1.4];
        let values = DMatrix::from_fn(scales.len(), s, |i, j| base[j] + scales[i] * shape[j]);
        let c = curves_from(values.clone());
        let r = fpca_smooth(&c, 0.99).unwrap();
        assert_eq!(r.components_kept, 1);
        assert!((&r.smoothed - &values).abs().max() < 1e-10);
    }

    #[test]
    fn full_pve_returns_input() {
        let values = DMatrix::from_fn(5, 7, |i, j| ((i * 7 + j) as f64).sqrt().sin());
        let c = curves_from(values.clone());
        let r = fpca_smooth(&c, 1.0).unwrap();
        assert_eq!(r.smoothed, values);
        assert_eq!(r.pve_achieved, 1.0);
    }

    #[test]
    fn rejects_bad_pve() {
        let c = curves_from(DMatrix::from_fn(3, 4, |i, j| (i + j) as f64));
        assert!(fpca_smooth(&c, 0.0).is_err());
        assert!(fpca_smooth(&c, 1.01).is_err());
        assert!(fpca_smooth(&c, f64::NAN).is_err());
    }

    #[test]
    fn constant_curves() {
        let c = curves_from(DMatrix::from_element(4, 3, 2.5));
        let r = fpca_smooth(&c, 0.9).unwrap();
        assert_relative_eq!(
            r.smoothed,
            DMatrix::from_element(4, 3, 2.5),
            epsilon = 1e-12
        );
    }

    #[test]
    fn component_selection_is_minimal() {
        let sq = [5.0, 3.0, 1.5, 0.5];
        assert_eq!(components_for(&sq, 0.5), (1, 0.5));
        assert_eq!(components_for(&sq, 0.51), (2, 0.8));
        assert_eq!(components_for(&sq, 0.95), (3, 0.95));
        assert_eq!(components_for(&sq, 0.96).0, 4);
    }
}
