//! Per-feature frequentist tests (Wald, likelihood ratio, Firth penalized
//! likelihood ratio) and the full differential-prevalence runner.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::AnalysisInput;
use crate::error::{Error, Result};
use crate::frequentist::fdr::bh_adjust;
use crate::frequentist::firth::{firth_plr_statistic, firth_profile_ci};
use crate::frequentist::glm::{dpa_design, irls_fit, GlmFit, GROUP_COEF};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestMethod {
    Wald,
    Lrt,
    Firth,
}

impl std::fmt::Display for TestMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TestMethod::Wald => "wald",
            TestMethod::Lrt => "lrt",
            TestMethod::Firth => "firth",
        })
    }
}

/// One feature's test outcome. Absent fields are the documented contract
/// for boundary situations (separation) rather than errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub feature_id: String,
    pub estimate: Option<f64>,
    pub se: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub method: TestMethod,
    pub significant: bool,
}

impl TestResult {
    fn empty(feature_id: &str, method: TestMethod) -> Self {
        TestResult {
            feature_id: feature_id.to_string(),
            estimate: None,
            se: None,
            ci_low: None,
            ci_high: None,
            p: None,
            q: None,
            method,
            significant: false,
        }
    }
}

/// Wald test for one coefficient: `p = 2 Phi(-|beta/se|)` with a normal
/// confidence interval. A separated fit yields absent estimate, interval,
/// and p-value (the N/A behavior for boundary features).
pub fn wald_test(fit: &GlmFit, coef: usize, alpha: f64, feature_id: &str) -> TestResult {
    let mut out = TestResult::empty(feature_id, TestMethod::Wald);
    if fit.separated || !fit.converged {
        return out;
    }
    let estimate = fit.coefficients[coef];
    let se = fit.cov_matrix[(coef, coef)].sqrt();
    if !estimate.is_finite() || !se.is_finite() || se <= 0.0 {
        return out;
    }
    let z = estimate / se;
    let z_crit = stats::inv_normal_cdf(1.0 - alpha / 2.0);
    out.estimate = Some(estimate);
    out.se = Some(se);
    out.ci_low = Some(estimate - z_crit * se);
    out.ci_high = Some(estimate + z_crit * se);
    out.p = Some(2.0 * stats::normal_sf(z.abs()));
    out
}

/// Likelihood-ratio test of one coefficient: refits without the tested
/// column. The deviance stays finite under separation of the full model as
/// long as the reduced model converges, so a p-value is still produced; the
/// estimate is absent in that case.
pub fn lrt_test(
    y: &[f64],
    x: &DMatrix<f64>,
    coef: usize,
    alpha: f64,
    feature_id: &str,
) -> Result<TestResult> {
    let mut out = TestResult::empty(feature_id, TestMethod::Lrt);
    let full = irls_fit(y, x)?;
    let reduced_x = x.clone().remove_column(coef);
    let reduced = irls_fit(y, &reduced_x)?;
    if reduced.separated || !reduced.converged {
        return Ok(out);
    }
    let deviance = (2.0 * (full.log_likelihood - reduced.log_likelihood)).max(0.0);
    out.p = Some(stats::chi2_sf_1(deviance));
    if !full.separated && full.converged {
        let estimate = full.coefficients[coef];
        let se = full.cov_matrix[(coef, coef)].sqrt();
        let z_crit = stats::inv_normal_cdf(1.0 - alpha / 2.0);
        out.estimate = Some(estimate);
        out.se = Some(se);
        out.ci_low = Some(estimate - z_crit * se);
        out.ci_high = Some(estimate + z_crit * se);
    }
    Ok(out)
}

/// Firth penalized-likelihood-ratio test. Estimates are always finite;
/// the default interval is Wald-type on the penalized fit, with the
/// profile-penalized interval behind `profile_ci`.
pub fn firth_plrt(
    y: &[f64],
    x: &DMatrix<f64>,
    coef: usize,
    alpha: f64,
    feature_id: &str,
    profile_ci: bool,
) -> Result<TestResult> {
    let mut out = TestResult::empty(feature_id, TestMethod::Firth);
    let (fit, stat) = firth_plr_statistic(y, x, coef)?;
    let estimate = fit.coefficients[coef];
    let se = fit.cov_matrix[(coef, coef)].sqrt();
    out.estimate = Some(estimate);
    out.se = Some(se);
    out.p = Some(stats::chi2_sf_1(stat));
    if profile_ci {
        let (lo, hi) = firth_profile_ci(y, x, coef, alpha)?;
        out.ci_low = Some(lo);
        out.ci_high = Some(hi);
    } else {
        let z_crit = stats::inv_normal_cdf(1.0 - alpha / 2.0);
        out.ci_low = Some(estimate - z_crit * se);
        out.ci_high = Some(estimate + z_crit * se);
    }
    Ok(out)
}

/// Runs the chosen test on every feature of `input` (intercept, group,
/// centered log reads, covariates design), BH-adjusts the available
/// p-values across features, and marks significance at `q < alpha`.
///
/// Features whose tests return absent p-values are excluded from the BH
/// family (they still appear in the output with empty fields); a feature
/// whose fit errors never aborts the run.
pub fn run_frequentist_dpa(
    input: &AnalysisInput,
    method: TestMethod,
    alpha: f64,
    profile_ci: bool,
) -> Result<Vec<TestResult>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let x = dpa_design(input);
    let mut results: Vec<TestResult> = (0..input.n_features())
        .into_par_iter()
        .map(|j| {
            let id = &input.feature_ids[j];
            let y: Vec<f64> = (0..input.n_samples())
                .map(|i| f64::from(input.presence[(i, j)]))
                .collect();
            let outcome = match method {
                TestMethod::Wald => irls_fit(&y, &x).map(|fit| wald_test(&fit, GROUP_COEF, alpha, id)),
                TestMethod::Lrt => lrt_test(&y, &x, GROUP_COEF, alpha, id),
                TestMethod::Firth => firth_plrt(&y, &x, GROUP_COEF, alpha, id, profile_ci),
            };
            // A failed fit contributes an all-absent row instead of
            // aborting the remaining features.
            outcome.unwrap_or_else(|_| TestResult::empty(id, method))
        })
        .collect();

    let tested: Vec<usize> = (0..results.len()).filter(|&j| results[j].p.is_some()).collect();
    let pvals: Vec<f64> = tested.iter().map(|&j| results[j].p.unwrap()).collect();
    let qvals = bh_adjust(&pvals)?;
    for (&j, &q) in tested.iter().zip(&qvals) {
        results[j].q = Some(q);
        results[j].significant = q < alpha;
    }
    Ok(results)
}
