//! Special functions and numerically careful accumulation.
//!
//! The regularized incomplete beta function is evaluated with the modified
//! Lentz continued fraction. Log-gamma, the upper incomplete gamma and the
//! complementary error function come from `statrs`.

use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_ur, ln_gamma as statrs_ln_gamma};

const CF_MAX_ITER: usize = 1000;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

pub fn ln_gamma(x: f64) -> f64 {
    statrs_ln_gamma(x)
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta function `I_x(a, b)` for `a, b > 0`, `x ∈ [0, 1]`.
pub fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    // The continued fraction converges fast for x < (a+1)/(a+b+2);
    // otherwise use I_x(a,b) = 1 - I_{1-x}(b,a).
    if x < (a + 1.0) / (a + b + 2.0) {
        beta_front(x, a, b) * beta_cf(x, a, b) / a
    } else {
        1.0 - beta_front(1.0 - x, b, a) * beta_cf(1.0 - x, b, a) / b
    }
}

/// `x^a (1-x)^b / B(a,b)`, evaluated in log space.
fn beta_front(x: f64, a: f64, b: f64) -> f64 {
    (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp()
}

fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;

    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;

    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Mass of a Beta(a, b) variable on `[lo, hi]`.
///
/// Picks the tail in which both CDF values are small so the difference keeps
/// its relative precision.
pub fn beta_interval_mass(lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let mass = if mid <= a / (a + b) {
        inc_beta(hi, a, b) - inc_beta(lo, a, b)
    } else {
        inc_beta(1.0 - lo, b, a) - inc_beta(1.0 - hi, b, a)
    };
    mass.clamp(0.0, 1.0)
}

/// Largest trial count for which [`binomial_interval_mass`] is used; binomial
/// coefficients stay exactly representable up to here.
pub const BINOMIAL_MASS_MAX_N: usize = 56;

/// `P(lo < X ≤ hi)` for `X ~ Beta(a, m - a + 1)` with integer `a` in `1..=m`,
/// via `I_x(a, m - a + 1) = P(Bin(m, x) ≥ a)`.
///
/// The shorter binomial tail is summed, so small cases such as
/// `m = 2, a = 1` on `[0, 1/2]` come out exactly (`3/4`).
pub fn binomial_interval_mass(lo: f64, hi: f64, m: usize, a: usize) -> f64 {
    debug_assert!(a >= 1 && a <= m);
    let tail = |x: f64, range: std::ops::Range<usize>| -> f64 {
        range
            .map(|j| binomial_coeff(m, j) * x.powi(j as i32) * (1.0 - x).powi((m - j) as i32))
            .collect::<CompensatedSum>()
            .value()
    };
    let mass = if a - 1 < m - a + 1 {
        // lower tail P(Bin < a) has `a` terms and decreases in x
        tail(lo, 0..a) - tail(hi, 0..a)
    } else {
        tail(hi, a..m + 1) - tail(lo, a..m + 1)
    };
    mass.clamp(0.0, 1.0)
}

fn binomial_coeff(m: usize, j: usize) -> f64 {
    let j = j.min(m - j);
    let mut c = 1.0f64;
    for i in 0..j {
        c = c * (m - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Upper tail `P(X > x)` of a chi-square variable with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(0.5 * df, 0.5 * x).clamp(0.0, 1.0)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inc_beta_endpoints() {
        assert_eq!(inc_beta(0.0, 2.0, 3.0), 0.0);
        assert_eq!(inc_beta(1.0, 2.0, 3.0), 1.0);
    }

    #[test]
    fn inc_beta_closed_forms() {
        // I_x(1, b) = 1 - (1-x)^b and I_x(a, 1) = x^a.
        for &x in &[0.01, 0.2, 0.5, 0.77, 0.99] {
            assert_relative_eq!(
                inc_beta(x, 1.0, 4.0),
                1.0 - (1.0 - x).powi(4),
                max_relative = 1e-13
            );
            assert_relative_eq!(inc_beta(x, 3.0, 1.0), x.powi(3), max_relative = 1e-13);
        }
    }

    #[test]
    fn inc_beta_matches_statrs() {
        use statrs::function::beta::beta_reg;
        for &(a, b) in &[
            (0.5, 0.5),
            (2.0, 7.0),
            (25.0, 26.0),
            (60.0, 3.0),
            (150.0, 150.0),
        ] {
            for i in 1..20 {
                let x = i as f64 / 20.0;
                assert_relative_eq!(
                    inc_beta(x, a, b),
                    beta_reg(a, b, x),
                    epsilon = 1e-13,
                    max_relative = 1e-11
                );
            }
        }
    }

    #[test]
    fn interval_mass_symmetry() {
        let a = 4.0;
        let b = 9.0;
        let m1 = beta_interval_mass(0.1, 0.3, a, b);
        let m2 = beta_interval_mass(0.7, 0.9, b, a);
        assert_relative_eq!(m1, m2, max_relative = 1e-13);
    }

    #[test]
    fn normal_and_chi_square_tails() {
        assert_relative_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(normal_cdf(1.959963984540054), 0.975, epsilon = 1e-10);
        // chi-square with 2 df has survival exp(-x/2)
        assert_relative_eq!(
            chi_square_sf(3.0, 2.0),
            (-1.5f64).exp(),
            max_relative = 1e-12
        );
        assert_eq!(chi_square_sf(0.0, 4.0), 1.0);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut v = vec![1e16, 1.0, -1e16];
        v.extend(std::iter::repeat_n(0.1, 10));
        assert_relative_eq!(compensated_sum(v), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn binomial_mass_matches_continued_fraction() {
        for m in 1..=BINOMIAL_MASS_MAX_N {
            for a in 1..=m {
                for z in 1..=m {
                    let (lo, hi) = ((z - 1) as f64 / m as f64, z as f64 / m as f64);
                    let b = binomial_interval_mass(lo, hi, m, a);
                    let c = beta_interval_mass(lo, hi, a as f64, (m - a + 1) as f64);
                    assert!((b - c).abs() < 1e-12, "m={m} a={a} z={z}: {b} vs {c}");
                }
            }
        }
        assert_eq!(binomial_interval_mass(0.0, 0.5, 2, 1), 0.75);
        assert_eq!(binomial_interval_mass(0.5, 1.0, 2, 1), 0.25);
    }
}
