//! Maximum-likelihood logistic regression via iteratively reweighted least
//! squares, with explicit separation detection.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::stats::{log1p_exp, logistic};

/// Coefficient magnitude beyond which the logistic MLE is treated as
/// diverging to the boundary (no biologically meaningful odds ratio comes
/// close to exp(15)).
pub const SEPARATION_BOUND: f64 = 15.0;

const COEF_TOL: f64 = 1e-8;
const LL_TOL: f64 = 1e-10;
const MAX_ITER: usize = 100;

/// A fitted per-feature logistic model.
#[derive(Debug, Clone)]
pub struct GlmFit {
    /// Log-odds-scale coefficients at the final iteration.
    pub coefficients: DVector<f64>,
    /// Inverse Fisher information at the optimum (meaningful when
    /// converged and not separated).
    pub cov_matrix: DMatrix<f64>,
    /// Maximized log-likelihood. Under separation this is the converged
    /// supremum, which stays finite and usable for likelihood-ratio tests.
    pub log_likelihood: f64,
    pub converged: bool,
    /// Set when the likelihood is maximized on the boundary (complete or
    /// quasi-complete separation): some coefficient exceeds
    /// [`SEPARATION_BOUND`] or the likelihood keeps increasing without the
    /// coefficients settling.
    pub separated: bool,
}

pub(crate) fn log_likelihood_at(y: &[f64], x: &DMatrix<f64>, beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    y.iter()
        .zip(eta.iter())
        .map(|(&yi, &e)| yi * e - log1p_exp(e))
        .sum()
}

/// Weighted normal-equations matrix `X' W X`.
fn fisher_information(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let p = x.ncols();
    let mut a = DMatrix::zeros(p, p);
    for i in 0..x.nrows() {
        let wi = w[i];
        if wi == 0.0 {
            continue;
        }
        for r in 0..p {
            let xr = x[(i, r)] * wi;
            for c in r..p {
                a[(r, c)] += xr * x[(i, c)];
            }
        }
    }
    for r in 0..p {
        for c in 0..r {
            a[(r, c)] = a[(c, r)];
        }
    }
    a
}

fn check_full_rank(x: &DMatrix<f64>) -> Result<()> {
    let svd = x.clone().svd(false, false);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = max_sv * 1e-10 * x.nrows().max(x.ncols()) as f64;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < x.ncols() {
        return Err(Error::Design(format!(
            "design matrix is rank deficient (rank {rank} of {} columns)",
            x.ncols()
        )));
    }
    Ok(())
}

/// Fits a logistic regression by IRLS.
///
/// Stops when the largest coefficient change falls below 1e-8 or after 100
/// iterations. Separation is flagged per the magnitude/monotone-likelihood
/// rule; in that case iteration continues until the log-likelihood itself
/// stabilizes so the supremum is still reported.
pub fn irls_fit(y: &[f64], x: &DMatrix<f64>) -> Result<GlmFit> {
    let n = x.nrows();
    let p = x.ncols();
    if y.len() != n {
        return Err(Error::Design(format!("y has {} entries, X has {n} rows", y.len())));
    }
    if let Some(&bad) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::Design(format!("binary response expected, found {bad}")));
    }
    check_full_rank(x)?;

    let mut beta = DVector::zeros(p);
    let mut ll = log_likelihood_at(y, x, &beta);
    let mut converged = false;
    let mut separated = false;
    let mut monotone = true;

    for _ in 0..MAX_ITER {
        let eta = x * &beta;
        let mu: Vec<f64> = eta.iter().map(|&e| logistic(e)).collect();
        let w: Vec<f64> = mu.iter().map(|&m| (m * (1.0 - m)).max(1e-12)).collect();

        let info = fisher_information(x, &w);
        // Working response z = eta + (y - mu)/w, solved in one step as
        // beta_new = (X'WX)^-1 X'W z.
        let mut xtwz = DVector::zeros(p);
        for i in 0..n {
            let z = eta[i] + (y[i] - mu[i]) / w[i];
            for r in 0..p {
                xtwz[r] += x[(i, r)] * w[i] * z;
            }
        }
        let chol = match info.clone().cholesky() {
            Some(c) => c,
            None => {
                // Weights have collapsed; on the separation path this is the
                // boundary, otherwise the design is numerically degenerate.
                if beta.amax() > SEPARATION_BOUND {
                    separated = true;
                    break;
                }
                return Err(Error::Design(
                    "weighted normal equations are singular".into(),
                ));
            }
        };
        let beta_new = chol.solve(&xtwz);

        let delta = (&beta_new - &beta).amax();
        let ll_new = log_likelihood_at(y, x, &beta_new);
        monotone &= ll_new >= ll - 1e-12;
        let ll_change = (ll_new - ll).abs();
        beta = beta_new;
        ll = ll_new;

        if delta < COEF_TOL {
            converged = true;
            break;
        }
        if beta.amax() > SEPARATION_BOUND && ll_change < LL_TOL {
            separated = true;
            break;
        }
    }

    if !converged && !separated {
        // Non-convergence with a monotonically increasing likelihood is the
        // separation signature even before coefficients pass the bound.
        separated = beta.amax() > SEPARATION_BOUND || monotone;
    }

    let eta = x * &beta;
    let w: Vec<f64> = eta.iter().map(|&e| {
        let m = logistic(e);
        (m * (1.0 - m)).max(1e-12)
    }).collect();
    let info = fisher_information(x, &w);
    let cov = info
        .clone()
        .try_inverse()
        .unwrap_or_else(|| DMatrix::from_element(p, p, f64::NAN));

    Ok(GlmFit {
        coefficients: beta,
        cov_matrix: cov,
        log_likelihood: ll,
        converged,
        separated,
    })
}

/// Builds the shared per-feature design matrix: intercept, group, centered
/// log reads, then covariates. The group coefficient sits at index 1.
pub fn dpa_design(input: &crate::data::AnalysisInput) -> DMatrix<f64> {
    let n = input.n_samples();
    let m = input.n_covariates();
    DMatrix::from_fn(n, 3 + m, |i, c| match c {
        0 => 1.0,
        1 => f64::from(input.group[i]),
        2 => input.log_reads_centered[i],
        _ => input.covariates_std[c - 3].values[i],
    })
}

/// Index of the group (differential prevalence) coefficient in
/// [`dpa_design`].
pub const GROUP_COEF: usize = 1;
