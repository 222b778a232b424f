//! Self-contained multi-chain No-U-Turn sampler with warmup adaptation,
//! convergence diagnostics, and posterior summaries.

mod adapt;
mod diagnostics;
mod export;
mod nuts;
mod summary;

pub use diagnostics::{degenerate_flags, ess_bulk, split_rhat};
pub use export::{summary_json, write_draws_tsv};
pub use nuts::{run_nuts, PosteriorDraws, SamplerConfig, Target};
pub use summary::{interval_from_draws, summarize, FeatureSummary};
