//! Presence derivation, feature filtering, and design construction.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::table::{Covariate, CovariateKind, FeatureTable};
use crate::error::{Error, Result};
use crate::stats;

/// Per-sample design columns plus the presence/absence response matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisInput {
    pub feature_ids: Vec<String>,
    /// N x K, entries 0/1.
    pub presence: Array2<u8>,
    pub group: Vec<u8>,
    /// Centered log10 total read counts (mean zero).
    pub log_reads_centered: Vec<f64>,
    /// Standardized continuous covariates and pass-through binary ones.
    pub covariates_std: Vec<Covariate>,
}

impl AnalysisInput {
    pub fn n_samples(&self) -> usize {
        self.group.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates_std.len()
    }

    /// Checks the derived-input invariants.
    pub fn validate(&self, min_present: usize) -> Result<()> {
        let n = self.n_samples();
        if self.presence.dim() != (n, self.n_features()) {
            return Err(Error::Validation("presence dimensions mismatch".into()));
        }
        let mean_reads = stats::mean(&self.log_reads_centered);
        if mean_reads.abs() > 1e-10 {
            return Err(Error::Validation(format!(
                "log_reads_centered mean {mean_reads} exceeds 1e-10"
            )));
        }
        for j in 0..self.n_features() {
            let present: usize = self.presence.column(j).iter().map(|&v| v as usize).sum();
            if present < min_present {
                return Err(Error::Validation(format!(
                    "feature '{}' present in {present} < {min_present} samples",
                    self.feature_ids[j]
                )));
            }
        }
        for cov in &self.covariates_std {
            if cov.kind == CovariateKind::Continuous {
                let m = stats::mean(&cov.values);
                let s = stats::sample_sd(&cov.values);
                if m.abs() > 1e-8 || (s - 1.0).abs() > 1e-8 {
                    return Err(Error::Validation(format!(
                        "covariate '{}' not standardized (mean {m}, sd {s})",
                        cov.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Presence indicator: 1 where the count is strictly positive.
pub fn derive_presence(counts: &Array2<f64>) -> Array2<u8> {
    counts.mapv(|c| u8::from(c > 0.0))
}

/// Retains features present in at least `min_present` samples, preserving
/// column order. Returns the filtered matrix and the kept column indices.
pub fn filter_features(presence: &Array2<u8>, min_present: usize) -> Result<(Array2<u8>, Vec<usize>)> {
    if min_present < 1 {
        return Err(Error::Argument("min_present must be at least 1".into()));
    }
    let kept: Vec<usize> = (0..presence.ncols())
        .filter(|&j| presence.column(j).iter().map(|&v| v as usize).sum::<usize>() >= min_present)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyResult(format!(
            "all {} features fall below the presence threshold {min_present}; review the threshold",
            presence.ncols()
        )));
    }
    let mut out = Array2::zeros((presence.nrows(), kept.len()));
    for (col, &j) in kept.iter().enumerate() {
        out.column_mut(col).assign(&presence.column(j));
    }
    Ok((out, kept))
}

/// Derives presence, filters features, and builds the per-sample design
/// columns: centered log10 reads and standardized/pass-through covariates.
pub fn build_design(table: &FeatureTable, min_present: usize) -> Result<AnalysisInput> {
    table.validate()?;
    let presence_full = derive_presence(&table.counts);
    let (presence, kept) = filter_features(&presence_full, min_present)?;
    let feature_ids = kept.iter().map(|&j| table.feature_ids[j].clone()).collect();

    let log_reads: Vec<f64> = table.total_reads.iter().map(|r| r.log10()).collect();
    let mean_lr = stats::mean(&log_reads);
    let log_reads_centered = log_reads.iter().map(|v| v - mean_lr).collect();

    let mut covariates_std = Vec::with_capacity(table.covariates.len());
    for cov in &table.covariates {
        match cov.kind {
            CovariateKind::Binary => covariates_std.push(cov.clone()),
            CovariateKind::Continuous => {
                let m = stats::mean(&cov.values);
                let s = stats::sample_sd(&cov.values);
                if !(s > 0.0) {
                    return Err(Error::DegenerateCovariate(format!(
                        "covariate '{}' has zero variance",
                        cov.name
                    )));
                }
                covariates_std.push(Covariate {
                    name: cov.name.clone(),
                    values: cov.values.iter().map(|v| (v - m) / s).collect(),
                    kind: CovariateKind::Continuous,
                });
            }
        }
    }

    Ok(AnalysisInput {
        feature_ids,
        presence,
        group: table.group.clone(),
        log_reads_centered,
        covariates_std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn presence_is_positivity_indicator() {
        let counts = array![[0.0, 3.5, 0.0001]];
        assert_eq!(derive_presence(&counts), array![[0u8, 1, 1]]);
    }

    #[test]
    fn all_zero_row_stays_zero() {
        let counts = array![[0.0, 0.0, 0.0]];
        assert_eq!(derive_presence(&counts), array![[0u8, 0, 0]]);
    }

    #[test]
    fn presence_matches_naive_double_loop() {
        // Brute-force indicator oracle on a random 20x10 count matrix.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let counts = Array2::from_shape_fn((20, 10), |_| {
            if rng.random::<f64>() < 0.4 {
                0.0
            } else {
                rng.random::<f64>() * 50.0
            }
        });
        let fast = derive_presence(&counts);
        for i in 0..20 {
            for j in 0..10 {
                let expected = if counts[(i, j)] > 0.0 { 1u8 } else { 0u8 };
                assert_eq!(fast[(i, j)], expected);
            }
        }
    }

    #[test]
    fn presence_is_idempotent() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let counts = Array2::from_shape_fn((8, 6), |_| {
            if rng.random::<f64>() < 0.5 {
                0.0
            } else {
                1.0 + rng.random::<f64>()
            }
        });
        let p1 = derive_presence(&counts);
        let p2 = derive_presence(&p1.mapv(f64::from));
        assert_eq!(p1, p2);
    }

    #[test]
    fn filter_boundary_at_threshold() {
        // One feature present in 3 of 40 samples (removed at threshold 4),
        // one present in exactly 4 (retained).
        let mut presence = Array2::<u8>::zeros((40, 2));
        for i in 0..3 {
            presence[(i, 0)] = 1;
        }
        for i in 0..4 {
            presence[(i, 1)] = 1;
        }
        let (filtered, kept) = filter_features(&presence, 4).unwrap();
        assert_eq!(kept, vec![1]);
        assert_eq!(filtered.ncols(), 1);
    }

    #[test]
    fn filter_matches_column_sum_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let presence = Array2::from_shape_fn((30, 12), |_| u8::from(rng.random::<f64>() < 0.15));
        match filter_features(&presence, 4) {
            Ok((_, kept)) => {
                let expected: Vec<usize> = (0..12)
                    .filter(|&j| (0..30).map(|i| presence[(i, j)] as usize).sum::<usize>() >= 4)
                    .collect();
                assert_eq!(kept, expected);
            }
            Err(Error::EmptyResult(_)) => {
                let any = (0..12)
                    .any(|j| (0..30).map(|i| presence[(i, j)] as usize).sum::<usize>() >= 4);
                assert!(!any);
            }
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn filter_at_one_removes_exactly_all_absent() {
        let presence = array![[0u8, 1, 0], [0, 0, 1], [0, 1, 1]];
        let (_, kept) = filter_features(&presence, 1).unwrap();
        assert_eq!(kept, vec![1, 2]);
    }

    fn toy_table() -> FeatureTable {
        FeatureTable {
            sample_ids: vec!["a".into(), "b".into(), "c".into()],
            feature_ids: vec!["f1".into()],
            counts: array![[1.0], [2.0], [3.0]],
            total_reads: vec![1000.0, 10_000.0, 100_000.0],
            group: vec![0, 1, 1],
            covariates: vec![],
        }
    }

    #[test]
    fn log_reads_centered_example() {
        let input = build_design(&toy_table(), 1).unwrap();
        assert_abs_diff_eq!(input.log_reads_centered[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(input.log_reads_centered[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(input.log_reads_centered[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn continuous_covariate_standardized() {
        let mut t = toy_table();
        t.covariates.push(Covariate::new("age", vec![2.0, 4.0, 6.0]));
        let input = build_design(&t, 1).unwrap();
        let vals = &input.covariates_std[0].values;
        assert_abs_diff_eq!(vals[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[2], 1.0, epsilon = 1e-12);
        input.validate(1).unwrap();
    }

    #[test]
    fn binary_covariate_passes_through() {
        let mut t = toy_table();
        t.covariates.push(Covariate::new("sex", vec![0.0, 1.0, 1.0]));
        let input = build_design(&t, 1).unwrap();
        assert_eq!(input.covariates_std[0].values, vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn constant_covariate_is_degenerate() {
        let mut t = toy_table();
        t.covariates.push(Covariate::new("c", vec![3.0, 3.0, 3.0]));
        let err = build_design(&t, 1).unwrap_err();
        assert!(matches!(err, Error::DegenerateCovariate(_)), "{err}");
    }

    #[test]
    fn design_ignores_feature_columns() {
        // Per-sample design must not depend on the count block.
        let t1 = toy_table();
        let mut t2 = toy_table();
        t2.counts = array![[9.0], [0.5], [1.0]];
        let d1 = build_design(&t1, 1).unwrap();
        let d2 = build_design(&t2, 1).unwrap();
        assert_eq!(d1.log_reads_centered, d2.log_reads_centered);
        assert_eq!(d1.group, d2.group);
        assert_eq!(d1.covariates_std, d2.covariates_std);
    }
}
