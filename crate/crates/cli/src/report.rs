//! Text and JSON reports for `drt test`.

use drt_core::rank_tests::Method;
use drt_core::{Alternative, SummaryKind, TestResult};
use serde::Serialize;

/// Bumped whenever a field of [`JsonReport`] changes meaning or is removed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct PreprocessReport {
    /// Requested proportion of variance, `None` for raw curves.
    pub pve: Option<f64>,
    pub components_kept: Option<usize>,
    pub pve_achieved: Option<f64>,
}

/// JSON document printed by `drt test --format json`. The [`TestResult`]
/// fields appear at top level.
#[derive(Debug, Clone, Serialize)]
pub struct JsonReport<'a> {
    pub schema_version: u32,
    pub statistic_name: &'static str,
    #[serde(flatten)]
    pub result: &'a TestResult,
    pub group_labels: &'a [String],
    pub summary: SummaryKind,
    pub preprocess: PreprocessReport,
    pub subjects: usize,
    pub occasions: usize,
}

pub fn statistic_name(method: Method) -> &'static str {
    match method {
        Method::MwwExact | Method::MwwNormal => "T+_DR",
        Method::KwChiSq => "H_DR",
    }
}

pub fn render_text(report: &JsonReport<'_>) -> String {
    let r = report.result;
    let title = match r.method {
        Method::MwwExact => "Doubly ranked Mann-Whitney-Wilcoxon test (exact null distribution)",
        Method::MwwNormal => "Doubly ranked Mann-Whitney-Wilcoxon test (normal approximation)",
        Method::KwChiSq => "Doubly ranked Kruskal-Wallis test (chi-square approximation)",
    };
    let mut out = format!("{title}\n");
    let mut line = |k: &str, v: String| out.push_str(&format!("  {k:<14}{v}\n"));
    line(report.statistic_name, format!("{}", r.statistic));
    match r.method {
        Method::KwChiSq => line("df", format!("{}", r.z_or_df)),
        _ => line("z", format!("{:.6}", r.z_or_df)),
    }
    let alt = match r.alternative {
        Alternative::TwoSided => "two-sided",
        Alternative::Less => "less: group 2 shifted down",
        Alternative::Greater => "greater: group 2 shifted up",
    };
    line("p-value", format!("{:.6e} ({alt})", r.p_value));
    let groups: Vec<String> = report
        .group_labels
        .iter()
        .zip(&r.group_sizes)
        .enumerate()
        .map(|(i, (l, n))| format!("{}='{l}' n={n}", i + 1))
        .collect();
    line("groups", groups.join(", "));
    line(
        "summary",
        match report.summary {
            SummaryKind::Sufficient => "sufficient statistic (suff)".into(),
            SummaryKind::AverageRank => "average rank (avg)".into(),
        },
    );
    let pre = &report.preprocess;
    line(
        "preprocessing",
        match (pre.pve, pre.components_kept, pre.pve_achieved) {
            (Some(p), Some(k), Some(a)) => {
                format!("FPCA pve={p}: {k} component(s), {a:.4} of variance")
            }
            _ => "none (raw curves)".into(),
        },
    );
    line(
        "ties",
        if r.tie_correction_applied {
            "tie-corrected variance".into()
        } else {
            "none".into()
        },
    );
    line(
        "data",
        format!(
            "{} subjects, {} occasions",
            report.subjects, report.occasions
        ),
    );
    out
}
