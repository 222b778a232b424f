//! Synthetic presence/absence corpora with known ground truth, standing in
//! for real multi-study collections.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::FeatureTable;
use crate::error::{Error, Result};
use crate::model::dist::sample_al;
use crate::model::params::logit;
use crate::stats::logistic;

/// Generator settings. Effects are drawn from an asymmetric Laplace so a
/// corpus can mimic the directional imbalance seen in real studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_per_group: usize,
    pub n_features: usize,
    /// Probability that a feature carries a true effect.
    pub fraction_nonnull: f64,
    /// Scale of the effect distribution.
    pub effect_tau: f64,
    /// Skewness of the effect distribution (mass share below zero).
    pub effect_nu: f64,
    /// Baseline prevalence drawn uniformly from this range, then mapped to
    /// a log-odds intercept.
    pub prevalence_range: (f64, f64),
    /// Per-sample log10 total reads drawn uniformly from this range.
    pub log10_reads_range: (f64, f64),
    /// True read-depth coefficient shared by all features.
    pub reads_effect: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_per_group: 50,
            n_features: 100,
            fraction_nonnull: 0.2,
            effect_tau: 1.0,
            effect_nu: 0.5,
            prevalence_range: (0.10, 0.90),
            log10_reads_range: (3.5, 5.0),
            reads_effect: 2.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_group == 0 || self.n_features == 0 {
            return Err(Error::Argument("group size and feature count must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.fraction_nonnull) {
            return Err(Error::Argument("fraction_nonnull must lie in [0,1]".into()));
        }
        if !(self.effect_tau > 0.0) || !(self.effect_nu > 0.0 && self.effect_nu < 1.0) {
            return Err(Error::Argument("effect distribution parameters out of range".into()));
        }
        let (lo, hi) = self.prevalence_range;
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            return Err(Error::Argument("prevalence range must satisfy 0 < lo <= hi < 1".into()));
        }
        let (rlo, rhi) = self.log10_reads_range;
        if !(rlo <= rhi) {
            return Err(Error::Argument("log10 reads range inverted".into()));
        }
        Ok(())
    }
}

/// True per-feature effects behind a synthetic table (zero = null feature).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub feature_ids: Vec<String>,
    pub beta: Vec<f64>,
}

impl GroundTruth {
    pub fn nonnull_count(&self) -> usize {
        self.beta.iter().filter(|&&b| b != 0.0).count()
    }
}

/// Simulates a table from the presence model itself: per-feature intercept
/// from the base prevalence distribution, effect zero or asymmetric-Laplace
/// distributed, plus the read-depth term. Counts are presence indicators.
/// Deterministic given the spec's seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(FeatureTable, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = 2 * spec.n_per_group;
    let k = spec.n_features;

    let group: Vec<u8> = (0..n).map(|i| u8::from(i >= spec.n_per_group)).collect();
    let log10_reads: Vec<f64> = (0..n)
        .map(|_| {
            let (lo, hi) = spec.log10_reads_range;
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..hi)
            }
        })
        .collect();
    let total_reads: Vec<f64> = log10_reads.iter().map(|&x| 10f64.powf(x)).collect();
    let mean_lr = crate::stats::mean(&log10_reads);
    let reads_centered: Vec<f64> = log10_reads.iter().map(|&x| x - mean_lr).collect();

    let mut alpha = Vec::with_capacity(k);
    let mut beta = Vec::with_capacity(k);
    for _ in 0..k {
        let (lo, hi) = spec.prevalence_range;
        let prev = if lo == hi { lo } else { rng.random_range(lo..hi) };
        alpha.push(logit(prev));
        let b = if rng.random::<f64>() < spec.fraction_nonnull {
            sample_al(&mut rng, spec.effect_tau, spec.effect_nu)
        } else {
            0.0
        };
        beta.push(b);
    }

    let mut counts = Array2::zeros((n, k));
    for j in 0..k {
        for i in 0..n {
            let eta = alpha[j]
                + beta[j] * f64::from(group[i])
                + spec.reads_effect * reads_centered[i];
            if rng.random::<f64>() < logistic(eta) {
                counts[(i, j)] = 1.0;
            }
        }
    }

    let feature_ids: Vec<String> = (0..k).map(|j| format!("F{:04}", j + 1)).collect();
    let table = FeatureTable {
        sample_ids: (0..n).map(|i| format!("S{:04}", i + 1)).collect(),
        feature_ids: feature_ids.clone(),
        counts,
        total_reads,
        group,
        covariates: vec![],
    };
    table.validate()?;
    Ok((table, GroundTruth { feature_ids, beta }))
}
