//! Forecast scoring: absolute and relative error metrics, the MAE
//! improvement percentage, the Wilcoxon rank-sum test, and per-step /
//! per-month breakdowns.

mod breakdown;
mod metrics;
mod wilcoxon;

pub use breakdown::{breakdown, significance, BreakdownBy, BreakdownRow, SignificanceRow, SIGNIFICANCE_LEVEL};
pub use metrics::{compute_metrics, improvement, MetricsBundle, MetricsContext};
pub use wilcoxon::{
    midranks, rank_sum_exact, rank_sum_normal, wilcoxon_rank_sum, PValueMethod, RankSumTest, EXACT_LIMIT,
};
