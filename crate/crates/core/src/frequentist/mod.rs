//! Frequentist differential-prevalence baselines sharing the logistic
//! likelihood: Wald, likelihood-ratio, and Firth penalized-likelihood
//! tests, plus Benjamini-Hochberg adjustment.

mod fdr;
mod firth;
mod glm;
mod testing;

pub use fdr::bh_adjust;
pub use firth::{firth_fit, firth_plr_statistic, firth_profile_ci};
pub use glm::{dpa_design, irls_fit, GlmFit, GROUP_COEF, SEPARATION_BOUND};
pub use testing::{firth_plrt, lrt_test, run_frequentist_dpa, wald_test, TestMethod, TestResult};
