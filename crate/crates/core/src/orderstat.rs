//! Null distribution of the rank held by the r-th order statistic.
//!
//! Under the null every rank at a fixed occasion is uniform on `1..=n`. The
//! rank `z` of the r-th smallest of `n` iid continuous draws, when those draws
//! are binned into `n` equal-width cells of the unit interval, has mass
//!
//! ```text
//! P[Z(r) = z] = n!/((r-1)!(n-r)!) ∫_{(z-1)/n}^{z/n} t^(r-1) (1-t)^(n-r) dt
//! ```
//!
//! which is the Beta(r, n-r+1) mass of one cell. A single-interval midpoint
//! rule turns the integral into a closed form that factors as an exponential
//! family in `r` with sufficient statistic
//! `t(z) = log[(z/n - 1/2n) / (1 - z/n + 1/2n)]`.

use crate::error::{Error, Result};
use crate::special::{
    beta_interval_mass, binomial_interval_mass, compensated_sum, ln_gamma, BINOMIAL_MASS_MAX_N,
};

/// Validated `(n, r, z)` triple: `1 ≤ r ≤ n`, `1 ≤ z ≤ n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderStatParams {
    pub n: usize,
    pub r: usize,
    pub z: usize,
}

impl OrderStatParams {
    pub fn new(n: usize, r: usize, z: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("sample size must be positive"));
        }
        if !(1..=n).contains(&r) {
            return Err(Error::invalid(format!(
                "order index r={r} outside [1, {n}]"
            )));
        }
        if !(1..=n).contains(&z) {
            return Err(Error::invalid(format!("rank z={z} outside [1, {n}]")));
        }
        Ok(Self { n, r, z })
    }
}

/// Factors of the midpoint-rule mass `h(z)·c(r)·exp(w(r)·t(z))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFamParts {
    pub h: f64,
    pub c: f64,
    pub w: f64,
    pub t: f64,
}

impl ExpFamParts {
    pub fn reconstruct(&self) -> f64 {
        self.h * self.c * (self.w * self.t).exp()
    }
}

/// `ln[Γ(n+1) / (Γ(r) Γ(n-r+1))]`.
fn ln_order_coeff(n: usize, r: usize) -> f64 {
    let (n, r) = (n as f64, r as f64);
    ln_gamma(n + 1.0) - ln_gamma(r) - ln_gamma(n - r + 1.0)
}

/// Lower and upper cell midpoint terms: `z/n - 1/2n` and `1 - z/n + 1/2n`.
fn midpoint_terms(z: f64, n: f64) -> (f64, f64) {
    let lo = (2.0 * z - 1.0) / (2.0 * n);
    let hi = (2.0 * n - 2.0 * z + 1.0) / (2.0 * n);
    (lo, hi)
}

/// Exact `P[Z(r) = z]`, as a Beta(r, n-r+1) interval mass.
pub fn exact_pmf(n: usize, r: usize, z: usize) -> Result<f64> {
    let p = OrderStatParams::new(n, r, z)?;
    let nf = p.n as f64;
    let (lo, hi) = ((p.z as f64 - 1.0) / nf, p.z as f64 / nf);
    if p.n <= BINOMIAL_MASS_MAX_N {
        return Ok(binomial_interval_mass(lo, hi, p.n, p.r));
    }
    Ok(beta_interval_mass(
        lo,
        hi,
        p.r as f64,
        (p.n - p.r + 1) as f64,
    ))
}

/// Midpoint-rule approximation of [`exact_pmf`], evaluated in log space.
pub fn approx_pmf(n: usize, r: usize, z: usize) -> Result<f64> {
    let p = OrderStatParams::new(n, r, z)?;
    let nf = p.n as f64;
    let (lo, hi) = midpoint_terms(p.z as f64, nf);
    let log_mass = ln_order_coeff(p.n, p.r) - nf.ln()
        + (p.r - 1) as f64 * lo.ln()
        + (p.n - p.r) as f64 * hi.ln();
    Ok(log_mass.exp())
}

/// Sufficient statistic `t(z)` for the order index.
///
/// Accepts non-integer `z` in `[1, n]` so mid-ranks from ties can be
/// summarized; the distributional results assume integer ranks.
pub fn suff_stat(z: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    let nf = n as f64;
    if !z.is_finite() || z < 1.0 || z > nf {
        return Err(Error::invalid(format!("rank {z} outside [1, {n}]")));
    }
    Ok(suff_stat_unchecked(z, nf))
}

#[inline]
pub(crate) fn suff_stat_unchecked(z: f64, n: f64) -> f64 {
    // log of (2z-1)/(2n-2z+1); the 2n factors cancel. Difference of logs
    // keeps t(z) = -t(n+1-z) exact in floating point.
    (2.0 * z - 1.0).ln() - (2.0 * n - 2.0 * z + 1.0).ln()
}

/// Exponential-family factors of the midpoint-rule mass.
pub fn expfam_parts(n: usize, r: usize, z: usize) -> Result<ExpFamParts> {
    let p = OrderStatParams::new(n, r, z)?;
    let nf = p.n as f64;
    let (lo, hi) = midpoint_terms(p.z as f64, nf);
    Ok(ExpFamParts {
        h: (nf * hi.ln() - lo.ln()).exp(),
        c: (ln_order_coeff(p.n, p.r) - nf.ln()).exp(),
        w: p.r as f64,
        t: suff_stat_unchecked(p.z as f64, nf),
    })
}

/// `E[t(z)]` for `z` uniform on `1..=n`. Zero for every `n`.
pub fn mean_suff_under_null(n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    compensated_sum((1..=n).map(|z| suff_stat_unchecked(z as f64, nf))) / nf
}
