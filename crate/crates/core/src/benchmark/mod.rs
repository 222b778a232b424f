//! Benchmark harness: synthetic corpora with known truth, null-data error
//! rates, finding counts, replication metrics, and alpha sweeps.

mod metrics;
mod synthetic;

pub use metrics::{
    alpha_sweep, count_significant, direction_imbalance, null_error_rate, null_error_report,
    replication_counts, AlphaPoint, DatasetCount, Direction, DirectionImbalance, NullErrorReport,
    PerDatasetFlag, ReplicationReport, SignificanceCall, SignificantCounts, SweepSource,
};
pub use synthetic::{generate_synthetic, GroundTruth, SyntheticSpec};
