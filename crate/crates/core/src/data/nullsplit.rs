//! Null datasets: random case/control partitions within a single group.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::table::FeatureTable;
use crate::error::{Error, Result};

/// One random partition of a single-group table into artificial case and
/// control groups. No population-level prevalence difference exists between
/// the two sides, so any significant finding on the split is a false
/// positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSplitSpec {
    pub source_id: String,
    pub seed: u64,
    pub n_case: usize,
    pub n_control: usize,
    /// Per-sample artificial group label (0 = control, 1 = case).
    pub assignment: Vec<u8>,
}

/// Generates `n_splits` independent null partitions.
///
/// Group sizes follow a two-step randomization: with probability 1/2 the
/// split is balanced (case gets the ceiling half), otherwise the case size
/// is uniform over all values leaving at least 10 samples on each side. The
/// assignment itself is a uniformly random partition. Deterministic given
/// `seed`.
pub fn make_null_splits(
    table: &FeatureTable,
    source_id: &str,
    n_splits: usize,
    seed: u64,
) -> Result<Vec<NullSplitSpec>> {
    let n = table.n_samples();
    if n < 20 {
        return Err(Error::Eligibility(format!(
            "null splits need at least 20 samples in the source group, got {n}"
        )));
    }
    if table.group.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::Eligibility(
            "null splits require a table restricted to a single group".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut splits = Vec::with_capacity(n_splits);
    for s in 0..n_splits {
        let n_case = if rng.random::<f64>() < 0.5 {
            n.div_ceil(2)
        } else {
            rng.random_range(10..=n - 10)
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut assignment = vec![0u8; n];
        for &i in order.iter().take(n_case) {
            assignment[i] = 1;
        }
        splits.push(NullSplitSpec {
            source_id: source_id.to_string(),
            seed: seed.wrapping_add(s as u64),
            n_case,
            n_control: n - n_case,
            assignment,
        });
    }
    Ok(splits)
}

/// Materializes a null split as a table with the artificial group labels.
/// Features are expected to be re-filtered per split by the downstream
/// design step.
pub fn apply_null_split(table: &FeatureTable, split: &NullSplitSpec) -> Result<FeatureTable> {
    if split.assignment.len() != table.n_samples() {
        return Err(Error::Argument(
            "split assignment length does not match the table".into(),
        ));
    }
    let mut out = table.clone();
    out.group = split.assignment.clone();
    Ok(out)
}
