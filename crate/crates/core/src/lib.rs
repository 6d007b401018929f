//! Doubly ranked Mann-Whitney-Wilcoxon and Kruskal-Wallis tests for grouped
//! functional data.
//!
//! The pipeline ranks every measurement occasion across subjects, collapses
//! each subject's rank curve into one score, and runs a univariate rank test
//! on the scores:
//!
//! ```
//! use drt_core::{doubly_ranked_test, CurveSet, DoublyRankedConfig};
//!
//! let rows = vec![
//!     vec![0.1, 0.4, 0.2], vec![0.3, 0.2, 0.5], vec![0.0, 0.1, 0.3],
//!     vec![1.1, 1.5, 1.2], vec![1.3, 1.2, 1.6], vec![1.0, 1.4, 1.1],
//! ];
//! let curves = CurveSet::from_rows(&rows, vec![0.0, 0.5, 1.0], vec![1, 1, 1, 2, 2, 2]).unwrap();
//! let result = doubly_ranked_test(&curves, &DoublyRankedConfig::default()).unwrap();
//! assert_eq!(result.statistic, 9.0); // every group-2 score beats every group-1 score
//! ```

pub mod curves;
pub mod error;
pub mod harness;
pub mod orderstat;
pub mod preprocess;
pub mod ranking;
pub mod simgen;
pub mod special;
pub mod summaries;

pub use curves::CurveSet;
pub use error::{Error, Result};
pub use rank_tests::{
    doubly_ranked_test, exact_mww_null_distribution, kruskal_wallis_test, mww_test, Alternative,
    DoublyRankedConfig, Method, TestResult,
};
pub use ranking::{rank_curves, rank_vector, RankCurves};
pub use summaries::{SummaryKind, SummaryScores};
