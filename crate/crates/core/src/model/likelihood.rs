//! Observation models: Bernoulli-logit on presence/absence and the
//! Gaussian variant on standardized log relative abundances.

use ndarray::Array2;

use crate::data::{AnalysisInput, FeatureTable};
use crate::error::{Error, Result};
use crate::model::params::{ParameterLayout, ParameterVector};
use crate::stats::{log1p_exp, logistic};

/// Likelihood kind plus its response data. The Bernoulli case reads the
/// presence matrix from the [`AnalysisInput`]; the Gaussian case carries its
/// own real-valued response with matching dimensions.
#[derive(Debug, Clone, PartialEq)]
pub enum Likelihood {
    BernoulliLogit,
    Gaussian { response: Array2<f64> },
}

impl Likelihood {
    pub fn is_gaussian(&self) -> bool {
        matches!(self, Likelihood::Gaussian { .. })
    }

    pub fn check_dims(&self, input: &AnalysisInput) -> Result<()> {
        if let Likelihood::Gaussian { response } = self {
            if response.dim() != (input.n_samples(), input.n_features()) {
                return Err(Error::Validation(format!(
                    "gaussian response is {:?}, expected ({}, {})",
                    response.dim(),
                    input.n_samples(),
                    input.n_features()
                )));
            }
        }
        Ok(())
    }
}

#[inline]
fn linear_predictor(
    pv: &ParameterVector,
    layout: &ParameterLayout,
    input: &AnalysisInput,
    i: usize,
    j: usize,
) -> f64 {
    let mut eta = pv.alpha[j]
        + pv.beta[j] * f64::from(input.group[i])
        + pv.beta_reads[j] * input.log_reads_centered[i];
    for m in 0..layout.n_covariates {
        eta += pv.beta_cov_at(layout, j, m) * input.covariates_std[m].values[i];
    }
    eta
}

/// Joint log-likelihood over all samples and features.
pub fn log_likelihood(
    pv: &ParameterVector,
    layout: &ParameterLayout,
    input: &AnalysisInput,
    lik: &Likelihood,
) -> f64 {
    let n = input.n_samples();
    let k = input.n_features();
    let mut ll = 0.0;
    match lik {
        Likelihood::BernoulliLogit => {
            for j in 0..k {
                for i in 0..n {
                    let eta = linear_predictor(pv, layout, input, i, j);
                    let y = f64::from(input.presence[(i, j)]);
                    ll += y * eta - log1p_exp(eta);
                }
            }
        }
        Likelihood::Gaussian { response } => {
            const HALF_LN_2PI: f64 = 0.9189385332046727;
            for j in 0..k {
                let sigma = pv.sigma[j];
                let ln_sigma = sigma.ln();
                for i in 0..n {
                    let eta = linear_predictor(pv, layout, input, i, j);
                    let r = (response[(i, j)] - eta) / sigma;
                    ll += -HALF_LN_2PI - ln_sigma - 0.5 * r * r;
                }
            }
        }
    }
    ll
}

/// Adds the likelihood gradient (constrained scale) into `grad_constrained`,
/// returning the log-likelihood value. The sigma slots receive d/d sigma_j.
pub(crate) fn log_likelihood_grad(
    pv: &ParameterVector,
    layout: &ParameterLayout,
    input: &AnalysisInput,
    lik: &Likelihood,
    grad_constrained: &mut [f64],
) -> f64 {
    let n = input.n_samples();
    let k = input.n_features();
    let mut ll = 0.0;
    for j in 0..k {
        let mut g_alpha = 0.0;
        let mut g_beta = 0.0;
        let mut g_reads = 0.0;
        let mut g_cov = vec![0.0; layout.n_covariates];
        let mut g_sigma = 0.0;
        for i in 0..n {
            let eta = linear_predictor(pv, layout, input, i, j);
            // d log-lik / d eta for this cell
            let d_eta = match lik {
                Likelihood::BernoulliLogit => {
                    let y = f64::from(input.presence[(i, j)]);
                    ll += y * eta - log1p_exp(eta);
                    y - logistic(eta)
                }
                Likelihood::Gaussian { response } => {
                    const HALF_LN_2PI: f64 = 0.9189385332046727;
                    let sigma = pv.sigma[j];
                    let resid = response[(i, j)] - eta;
                    let r = resid / sigma;
                    ll += -HALF_LN_2PI - sigma.ln() - 0.5 * r * r;
                    g_sigma += -1.0 / sigma + resid * resid / (sigma * sigma * sigma);
                    resid / (sigma * sigma)
                }
            };
            g_alpha += d_eta;
            g_beta += d_eta * f64::from(input.group[i]);
            g_reads += d_eta * input.log_reads_centered[i];
            for m in 0..layout.n_covariates {
                g_cov[m] += d_eta * input.covariates_std[m].values[i];
            }
        }
        grad_constrained[layout.idx_alpha(j)] += g_alpha;
        grad_constrained[layout.idx_beta(j)] += g_beta;
        grad_constrained[layout.idx_beta_reads(j)] += g_reads;
        for m in 0..layout.n_covariates {
            grad_constrained[layout.idx_beta_cov(j, m)] += g_cov[m];
        }
        if layout.gaussian {
            grad_constrained[layout.idx_sigma(j)] += g_sigma;
        }
    }
    ll
}

/// Builds the Gaussian-variant response: per-feature standardized
/// log(relative abundance + pseudocount).
///
/// Relative abundances are the row-normalized counts. The default
/// pseudocount is half the smallest nonzero relative abundance of the
/// feature; pass `pseudocount` to override with a fixed value.
pub fn standardized_log_abundance(
    table: &FeatureTable,
    kept_features: &[usize],
    pseudocount: Option<f64>,
) -> Result<Array2<f64>> {
    let n = table.n_samples();
    let row_sums: Vec<f64> = (0..n).map(|i| table.counts.row(i).sum()).collect();
    if let Some(i) = row_sums.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::Validation(format!(
            "sample '{}' has zero total count; cannot form relative abundances",
            table.sample_ids[i]
        )));
    }
    let mut out = Array2::zeros((n, kept_features.len()));
    for (col, &j) in kept_features.iter().enumerate() {
        let rel: Vec<f64> = (0..n).map(|i| table.counts[(i, j)] / row_sums[i]).collect();
        let pc = match pseudocount {
            Some(p) => p,
            None => {
                let min_nonzero = rel
                    .iter()
                    .copied()
                    .filter(|&v| v > 0.0)
                    .fold(f64::INFINITY, f64::min);
                if !min_nonzero.is_finite() {
                    return Err(Error::Validation(format!(
                        "feature '{}' has no nonzero abundance",
                        table.feature_ids[j]
                    )));
                }
                0.5 * min_nonzero
            }
        };
        let logged: Vec<f64> = rel.iter().map(|&v| (v + pc).ln()).collect();
        let m = crate::stats::mean(&logged);
        let s = crate::stats::sample_sd(&logged);
        if !(s > 0.0) {
            return Err(Error::Validation(format!(
                "feature '{}' has constant log abundance; cannot standardize",
                table.feature_ids[j]
            )));
        }
        for i in 0..n {
            out[(i, col)] = (logged[i] - m) / s;
        }
    }
    Ok(out)
}
