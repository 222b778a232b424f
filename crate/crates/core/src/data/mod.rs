//! Observation tables, presence/absence derivation, design construction,
//! and null-split datasets.

mod design;
mod nullsplit;
mod table;

pub use design::{build_design, derive_presence, filter_features, AnalysisInput};
pub use nullsplit::{apply_null_split, make_null_splits, NullSplitSpec};
pub use table::{
    ingest_table, write_table, Covariate, CovariateKind, FeatureTable, IngestOptions, TableFormat,
};
