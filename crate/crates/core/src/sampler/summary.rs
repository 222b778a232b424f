//! Posterior summaries and interval-based significance calls.

use serde::{Deserialize, Serialize};

use crate::sampler::nuts::PosteriorDraws;
use crate::stats;

/// Per-feature effect summary: posterior median, equal-tailed credible
/// interval, and the interval-excludes-zero significance call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub feature_id: String,
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub significant: bool,
    pub alpha: f64,
}

/// Summarizes the effect draws of each `(feature id, parameter index)` pair
/// at level `1 - alpha`: median and the (alpha/2, 1-alpha/2) equal-tailed
/// quantiles by linear interpolation of order statistics. A feature is
/// significant when the interval excludes zero.
pub fn summarize(
    draws: &PosteriorDraws,
    features: &[(String, usize)],
    alpha: f64,
) -> Vec<FeatureSummary> {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
    features
        .iter()
        .map(|(id, param)| {
            let mut xs = draws.parameter_draws(*param);
            xs.sort_by(|a, b| a.partial_cmp(b).expect("non-finite draw"));
            let median = stats::quantile_sorted(&xs, 0.5);
            let ci_low = stats::quantile_sorted(&xs, alpha / 2.0);
            let ci_high = stats::quantile_sorted(&xs, 1.0 - alpha / 2.0);
            FeatureSummary {
                feature_id: id.clone(),
                median,
                ci_low,
                ci_high,
                significant: ci_low > 0.0 || ci_high < 0.0,
                alpha,
            }
        })
        .collect()
}

/// Significance of a raw draw vector at level `alpha` (used when
/// re-deriving calls at a different level than the stored summary).
pub fn interval_from_draws(xs: &[f64], alpha: f64) -> (f64, f64, f64) {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("non-finite draw"));
    (
        stats::quantile_sorted(&v, 0.5),
        stats::quantile_sorted(&v, alpha / 2.0),
        stats::quantile_sorted(&v, 1.0 - alpha / 2.0),
    )
}
