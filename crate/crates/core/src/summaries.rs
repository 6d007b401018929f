//! Per-subject summaries of rank curves.
//!
//! Each subject's rank curve collapses to one score. Under the null the
//! sufficient-statistic summary has mean zero and the average-rank summary
//! has mean `(n+1)/2`; group differences show up as location shifts of the
//! score distributions, which the second-stage rank test detects.
//!
//! Both summaries weight every sampled occasion equally, regardless of grid
//! spacing.

use serde::{Deserialize, Serialize};

use crate::orderstat::suff_stat_unchecked;
use crate::ranking::RankCurves;
use crate::special::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryKind {
    /// Mean of the sufficient statistic `t(z)` over occasions.
    #[default]
    Sufficient,
    /// Mean rank over occasions.
    AverageRank,
}

impl SummaryKind {
    pub fn label(self) -> &'static str {
        match self {
            SummaryKind::Sufficient => "suff",
            SummaryKind::AverageRank => "avg",
        }
    }
}

impl std::fmt::Display for SummaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for SummaryKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "suff" | "sufficient" => Ok(SummaryKind::Sufficient),
            "avg" | "average" | "average_rank" => Ok(SummaryKind::AverageRank),
            other => Err(format!("unknown summary '{other}' (expected suff or avg)")),
        }
    }
}

/// One score per subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryScores {
    pub scores: Vec<f64>,
    pub kind: SummaryKind,
    pub n: usize,
    pub grid_len: usize,
}

/// Mean of `t(z)` along each subject's rank curve.
pub fn sufficient_summary(ranks: &RankCurves) -> SummaryScores {
    let n = ranks.n();
    let nf = n as f64;
    let s = ranks.grid_len() as f64;
    // Ranks in a RankCurves lie in [1, n], so t(z) is always defined.
    let scores = (0..n)
        .map(|i| {
            ranks
                .row(i)
                .map(|z| suff_stat_unchecked(z, nf))
                .collect::<CompensatedSum>()
                .value()
                / s
        })
        .collect();
    SummaryScores {
        scores,
        kind: SummaryKind::Sufficient,
        n,
        grid_len: ranks.grid_len(),
    }
}

/// Mean rank along each subject's rank curve.
pub fn average_rank_summary(ranks: &RankCurves) -> SummaryScores {
    let n = ranks.n();
    let s = ranks.grid_len() as f64;
    let scores = (0..n)
        .map(|i| ranks.row(i).collect::<CompensatedSum>().value() / s)
        .collect();
    SummaryScores {
        scores,
        kind: SummaryKind::AverageRank,
        n,
        grid_len: ranks.grid_len(),
    }
}

pub fn summarize(ranks: &RankCurves, kind: SummaryKind) -> SummaryScores {
    match kind {
        SummaryKind::Sufficient => sufficient_summary(ranks),
        SummaryKind::AverageRank => average_rank_summary(ranks),
    }
}
