//! Evaluation metrics: null-data error rate, significant-finding counts,
//! cross-study replication/conflict counting, alpha sweeps, and direction
//! imbalance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::interval_from_draws;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Positive,
    Negative,
}

impl Direction {
    pub fn of(estimate: f64) -> Direction {
        if estimate >= 0.0 {
            Direction::Positive
        } else {
            Direction::Negative
        }
    }
}

/// One feature's significance call in one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceCall {
    pub feature_id: String,
    pub direction: Direction,
    pub significant: bool,
    pub method: String,
    pub alpha: f64,
}

/// Proportion of null datasets with any significant finding, with a Wilson
/// score interval. Under the global null this proportion estimates the
/// probability of making at least one discovery, which is what an
/// FDR-controlling procedure bounds by alpha.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullErrorReport {
    pub n_datasets: usize,
    pub n_with_any_finding: usize,
    pub lambda: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Per-dataset audit flags, in input order.
    pub per_dataset: Vec<PerDatasetFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerDatasetFlag {
    pub dataset_id: String,
    pub any_finding: bool,
}

/// Builds the error-rate report from per-dataset any-finding flags
/// (90% Wilson interval).
pub fn null_error_report(flags: &[PerDatasetFlag]) -> Result<NullErrorReport> {
    if flags.is_empty() {
        return Err(Error::Argument("no null datasets supplied".into()));
    }
    let n = flags.len();
    let hits = flags.iter().filter(|f| f.any_finding).count();
    let (ci_low, ci_high) = stats::wilson_interval(hits, n, 0.90);
    Ok(NullErrorReport {
        n_datasets: n,
        n_with_any_finding: hits,
        lambda: hits as f64 / n as f64,
        ci_low,
        ci_high,
        per_dataset: flags.to_vec(),
    })
}

/// Runs `runner` over a list of null datasets and reports the error rate.
pub fn null_error_rate<D, F>(datasets: &[(String, D)], runner: F) -> Result<NullErrorReport>
where
    F: Fn(&D) -> Result<Vec<SignificanceCall>>,
{
    if datasets.is_empty() {
        return Err(Error::Argument("no null datasets supplied".into()));
    }
    let mut flags = Vec::with_capacity(datasets.len());
    for (id, data) in datasets {
        let calls = runner(data)?;
        flags.push(PerDatasetFlag {
            dataset_id: id.clone(),
            any_finding: calls.iter().any(|c| c.significant),
        });
    }
    null_error_report(&flags)
}

/// Per-dataset significant counts/proportions and corpus-level summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificantCounts {
    pub per_dataset: Vec<DatasetCount>,
    pub mean_count: f64,
    pub median_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetCount {
    pub dataset_id: String,
    pub n_significant: usize,
    pub n_tested: usize,
    pub proportion: f64,
}

pub fn count_significant(results: &[(String, Vec<SignificanceCall>)]) -> SignificantCounts {
    let per_dataset: Vec<DatasetCount> = results
        .iter()
        .map(|(id, calls)| {
            let n_sig = calls.iter().filter(|c| c.significant).count();
            let n_tested = calls.len();
            DatasetCount {
                dataset_id: id.clone(),
                n_significant: n_sig,
                n_tested,
                proportion: if n_tested > 0 { n_sig as f64 / n_tested as f64 } else { 0.0 },
            }
        })
        .collect();
    let counts: Vec<f64> = per_dataset.iter().map(|d| d.n_significant as f64).collect();
    SignificantCounts {
        mean_count: if counts.is_empty() { 0.0 } else { stats::mean(&counts) },
        median_count: if counts.is_empty() { 0.0 } else { stats::median(&counts) },
        per_dataset,
    }
}

/// Replication outcome for one dataset pair: features significant in both
/// with equal direction (replicated) or opposite direction (conflicting).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub pair_id: String,
    pub n_replicated: usize,
    pub n_conflicting: usize,
    pub replicated_features: Vec<String>,
    pub conflicting_features: Vec<String>,
    /// Per-alpha totals when an alpha sweep was requested.
    pub curve: Vec<AlphaPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaPoint {
    pub alpha: f64,
    pub replicated: usize,
    pub conflicting: usize,
}

fn call_map(calls: &[SignificanceCall]) -> Result<BTreeMap<&str, &SignificanceCall>> {
    let mut map = BTreeMap::new();
    for c in calls {
        if map.insert(c.feature_id.as_str(), c).is_some() {
            return Err(Error::Argument(format!(
                "duplicate feature id '{}' within one call list",
                c.feature_id
            )));
        }
    }
    Ok(map)
}

/// Counts replicated and conflicting findings between two datasets.
/// Features absent from either list are ignored.
pub fn replication_counts(
    pair_id: &str,
    calls_a: &[SignificanceCall],
    calls_b: &[SignificanceCall],
) -> Result<ReplicationReport> {
    let a = call_map(calls_a)?;
    let b = call_map(calls_b)?;
    let mut replicated = Vec::new();
    let mut conflicting = Vec::new();
    for (id, ca) in &a {
        if let Some(cb) = b.get(id) {
            if ca.significant && cb.significant {
                if ca.direction == cb.direction {
                    replicated.push((*id).to_string());
                } else {
                    conflicting.push((*id).to_string());
                }
            }
        }
    }
    Ok(ReplicationReport {
        pair_id: pair_id.to_string(),
        n_replicated: replicated.len(),
        n_conflicting: conflicting.len(),
        replicated_features: replicated,
        conflicting_features: conflicting,
        curve: Vec::new(),
    })
}

/// A result set whose significance can be re-derived at any level: either
/// BH-adjusted q-values with point estimates, or stored posterior draws of
/// each feature's effect.
#[derive(Debug, Clone)]
pub enum SweepSource {
    /// (feature id, q-value if tested, estimate for the direction).
    QValues(Vec<(String, Option<f64>, Option<f64>)>),
    /// Stored effect draws per feature.
    Draws {
        feature_ids: Vec<String>,
        beta_draws: Vec<Vec<f64>>,
        method: String,
    },
}

impl SweepSource {
    /// Re-derives calls at `alpha`: `q < alpha` for threshold-based
    /// results, interval-excludes-zero recomputed from draws otherwise.
    pub fn calls_at(&self, alpha: f64) -> Result<Vec<SignificanceCall>> {
        match self {
            SweepSource::QValues(rows) => Ok(rows
                .iter()
                .map(|(id, q, estimate)| SignificanceCall {
                    feature_id: id.clone(),
                    direction: Direction::of(estimate.unwrap_or(0.0)),
                    significant: matches!(q, Some(q) if *q < alpha),
                    method: "q_threshold".into(),
                    alpha,
                })
                .collect()),
            SweepSource::Draws { feature_ids, beta_draws, method } => {
                if beta_draws.is_empty() && !feature_ids.is_empty() {
                    return Err(Error::Capability(
                        "stored draws are required to re-derive intervals at a new level".into(),
                    ));
                }
                Ok(feature_ids
                    .iter()
                    .zip(beta_draws)
                    .map(|(id, draws)| {
                        let (median, lo, hi) = interval_from_draws(draws, alpha);
                        SignificanceCall {
                            feature_id: id.clone(),
                            direction: Direction::of(median),
                            significant: lo > 0.0 || hi < 0.0,
                            method: method.clone(),
                            alpha,
                        }
                    })
                    .collect())
            }
        }
    }
}

/// Replication/conflict totals at each requested level.
pub fn alpha_sweep(
    source_a: &SweepSource,
    source_b: &SweepSource,
    alphas: &[f64],
) -> Result<Vec<AlphaPoint>> {
    let mut curve = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let report = replication_counts(
            "sweep",
            &source_a.calls_at(alpha)?,
            &source_b.calls_at(alpha)?,
        )?;
        curve.push(AlphaPoint {
            alpha,
            replicated: report.n_replicated,
            conflicting: report.n_conflicting,
        });
    }
    Ok(curve)
}

/// Counts of significant features by effect sign plus the majority-share
/// proportion (absent when nothing is significant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionImbalance {
    pub n_positive: usize,
    pub n_negative: usize,
    pub majority_proportion: Option<f64>,
}

pub fn direction_imbalance(calls: &[SignificanceCall]) -> DirectionImbalance {
    let n_positive = calls
        .iter()
        .filter(|c| c.significant && c.direction == Direction::Positive)
        .count();
    let n_negative = calls
        .iter()
        .filter(|c| c.significant && c.direction == Direction::Negative)
        .count();
    let total = n_positive + n_negative;
    DirectionImbalance {
        n_positive,
        n_negative,
        majority_proportion: if total > 0 {
            Some(n_positive.max(n_negative) as f64 / total as f64)
        } else {
            None
        },
    }
}
