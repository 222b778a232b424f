//! Draw and diagnostic export formats.

use std::io::Write;

use serde_json::json;

use crate::error::Result;
use crate::sampler::nuts::PosteriorDraws;

/// Writes draws as a flat TSV with columns `chain`, `iteration`,
/// `parameter`, `value`. `param_filter` restricts to a subset of parameter
/// indices (in the given order); `None` exports everything.
pub fn write_draws_tsv<W: Write>(
    mut w: W,
    draws: &PosteriorDraws,
    param_names: &[String],
    param_filter: Option<&[usize]>,
) -> Result<()> {
    assert_eq!(param_names.len(), draws.dim());
    writeln!(w, "chain\titeration\tparameter\tvalue")?;
    let all: Vec<usize>;
    let params: &[usize] = match param_filter {
        Some(f) => f,
        None => {
            all = (0..draws.dim()).collect();
            &all
        }
    };
    for c in 0..draws.n_chains() {
        for i in 0..draws.n_kept() {
            for &p in params {
                writeln!(w, "{c}\t{i}\t{}\t{}", param_names[p], draws.draws[(c, i, p)])?;
            }
        }
    }
    Ok(())
}

/// JSON convergence summary. `runtime_seconds` is optional so callers that
/// require byte-identical reruns can omit it.
pub fn summary_json(draws: &PosteriorDraws, runtime_seconds: Option<f64>) -> serde_json::Value {
    json!({
        "schema": "dpa_diagnostics_v1",
        "chains": draws.n_chains(),
        "kept_per_chain": draws.n_kept(),
        "total_draws": draws.total_draws(),
        "divergences": draws.divergence_count,
        "rhat_max": finite_or_null(draws.max_rhat()),
        "ess_bulk_min": finite_or_null(draws.min_ess()),
        "degenerate_parameters": draws.degenerate.iter().filter(|&&d| d).count(),
        "runtime_seconds": runtime_seconds,
    })
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        serde_json::Value::Null
    }
}
