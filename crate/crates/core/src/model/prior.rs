//! Prior hierarchy: half-normal scale and Laplace/Beta skewness
//! hyperpriors, a shared asymmetric-Laplace prior on the per-feature
//! effects, and normal priors on the nuisance coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::dist;
use crate::model::params::{ParameterLayout, ParameterVector};

/// How the skewness hyperparameter is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuMode {
    /// Laplace hyperprior truncated to (0,1) and renormalized.
    Free,
    /// Skewness pinned at 1/2 (symmetric effect prior, no hyperprior term).
    FixedSymmetric,
    /// Beta hyperprior; no truncation needed.
    BetaHyperprior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    /// Scale of the half-normal hyperprior on the effect-prior scale.
    pub tau0_scale: f64,
    pub nu_mode: NuMode,
    /// Location of the Laplace skewness hyperprior.
    pub nu_location: f64,
    /// Scale of the Laplace skewness hyperprior.
    pub nu_scale: f64,
    /// Shape pair of the Beta skewness hyperprior.
    pub beta_shape: (f64, f64),
    pub alpha_sd: f64,
    pub reads_prior_mean: f64,
    pub reads_prior_sd: f64,
    pub covariate_sd: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            tau0_scale: 1.0,
            nu_mode: NuMode::Free,
            nu_location: 0.50,
            nu_scale: 0.05,
            beta_shape: (5.0, 5.0),
            alpha_sd: 5.0,
            reads_prior_mean: 2.0,
            reads_prior_sd: 2.0,
            covariate_sd: 1.0,
        }
    }
}

/// Named hyperprior presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorPreset {
    /// Half-normal(0, 1) scale, Laplace(0.50, 0.05) skewness.
    Default,
    /// Skewness fixed at 1/2.
    Symm,
    /// Beta(5, 5) skewness hyperprior (skewness varies more freely).
    Skewed,
    /// Half-normal(0, 2) scale.
    Wide,
    /// Half-normal(0, 0.5) scale.
    Narrow,
}

impl PriorPreset {
    pub const ALL: [PriorPreset; 5] = [
        PriorPreset::Default,
        PriorPreset::Symm,
        PriorPreset::Skewed,
        PriorPreset::Wide,
        PriorPreset::Narrow,
    ];
}

impl std::str::FromStr for PriorPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "default" => Ok(PriorPreset::Default),
            "symm" => Ok(PriorPreset::Symm),
            "skewed" => Ok(PriorPreset::Skewed),
            "wide" => Ok(PriorPreset::Wide),
            "narrow" => Ok(PriorPreset::Narrow),
            other => Err(Error::Argument(format!("unknown prior preset '{other}'"))),
        }
    }
}

impl std::fmt::Display for PriorPreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PriorPreset::Default => "default",
            PriorPreset::Symm => "symm",
            PriorPreset::Skewed => "skewed",
            PriorPreset::Wide => "wide",
            PriorPreset::Narrow => "narrow",
        };
        f.write_str(s)
    }
}

impl PriorConfig {
    pub fn preset(p: PriorPreset) -> Self {
        let mut cfg = PriorConfig::default();
        match p {
            PriorPreset::Default => {}
            PriorPreset::Symm => cfg.nu_mode = NuMode::FixedSymmetric,
            PriorPreset::Skewed => cfg.nu_mode = NuMode::BetaHyperprior,
            PriorPreset::Wide => cfg.tau0_scale = 2.0,
            PriorPreset::Narrow => cfg.tau0_scale = 0.5,
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tau0_scale", self.tau0_scale),
            ("nu_scale", self.nu_scale),
            ("alpha_sd", self.alpha_sd),
            ("reads_prior_sd", self.reads_prior_sd),
            ("covariate_sd", self.covariate_sd),
            ("beta_shape.0", self.beta_shape.0),
            ("beta_shape.1", self.beta_shape.1),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.nu_location > 0.0 && self.nu_location < 1.0) {
            return Err(Error::Validation(format!(
                "nu_location must lie in (0,1), got {}",
                self.nu_location
            )));
        }
        Ok(())
    }

    pub(crate) fn nu_free(&self) -> bool {
        self.nu_mode != NuMode::FixedSymmetric
    }
}

/// Joint log-prior on the constrained scale (no transform Jacobians; those
/// belong to the unconstrained posterior, see `DpaModel`).
pub fn log_prior(pv: &ParameterVector, layout: &ParameterLayout, cfg: &PriorConfig) -> f64 {
    let mut lp = dist::halfnormal_logpdf(pv.tau0, cfg.tau0_scale);
    match cfg.nu_mode {
        NuMode::Free => {
            lp += dist::trunc01_laplace_logpdf(pv.nu0, cfg.nu_location, cfg.nu_scale);
        }
        NuMode::BetaHyperprior => {
            lp += dist::beta_logpdf(pv.nu0, cfg.beta_shape.0, cfg.beta_shape.1);
        }
        NuMode::FixedSymmetric => {}
    }
    for j in 0..layout.n_features {
        lp += dist::al_logpdf_unchecked(pv.beta[j], 0.0, pv.tau0, pv.nu0);
        lp += dist::normal_logpdf(pv.alpha[j], 0.0, cfg.alpha_sd);
        lp += dist::normal_logpdf(pv.beta_reads[j], cfg.reads_prior_mean, cfg.reads_prior_sd);
        for m in 0..layout.n_covariates {
            lp += dist::normal_logpdf(pv.beta_cov_at(layout, j, m), 0.0, cfg.covariate_sd);
        }
        if layout.gaussian {
            lp += dist::gamma11_logpdf(pv.sigma[j]);
        }
    }
    lp
}

/// Accumulates the constrained-scale prior gradient into per-parameter
/// slots. `d_tau0`/`d_nu0` receive the hyperparameter components; the
/// remaining slots index the layout directly.
pub(crate) fn log_prior_grad(
    pv: &ParameterVector,
    layout: &ParameterLayout,
    cfg: &PriorConfig,
    grad_constrained: &mut [f64],
    d_tau0: &mut f64,
    d_nu0: &mut f64,
) {
    *d_tau0 += -pv.tau0 / (cfg.tau0_scale * cfg.tau0_scale);
    match cfg.nu_mode {
        NuMode::Free => {
            *d_nu0 += dist::trunc01_laplace_dlogpdf(pv.nu0, cfg.nu_location, cfg.nu_scale);
        }
        NuMode::BetaHyperprior => {
            *d_nu0 += dist::beta_dlogpdf(pv.nu0, cfg.beta_shape.0, cfg.beta_shape.1);
        }
        NuMode::FixedSymmetric => {}
    }
    for j in 0..layout.n_features {
        let (d_beta, d_tau, d_nu) = dist::al_grad(pv.beta[j], 0.0, pv.tau0, pv.nu0);
        grad_constrained[layout.idx_beta(j)] += d_beta;
        *d_tau0 += d_tau;
        if layout.nu_free {
            *d_nu0 += d_nu;
        }
        grad_constrained[layout.idx_alpha(j)] += -pv.alpha[j] / (cfg.alpha_sd * cfg.alpha_sd);
        grad_constrained[layout.idx_beta_reads(j)] +=
            -(pv.beta_reads[j] - cfg.reads_prior_mean) / (cfg.reads_prior_sd * cfg.reads_prior_sd);
        for m in 0..layout.n_covariates {
            grad_constrained[layout.idx_beta_cov(j, m)] +=
                -pv.beta_cov_at(layout, j, m) / (cfg.covariate_sd * cfg.covariate_sd);
        }
        if layout.gaussian {
            // Gamma(1,1): d/d sigma = -1.
            grad_constrained[layout.idx_sigma(j)] += -1.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn vector(k: usize, beta: f64) -> ParameterVector {
        ParameterVector {
            tau0: 1.0,
            nu0: 0.5,
            alpha: vec![0.0; k],
            beta: vec![beta; k],
            beta_reads: vec![2.0; k],
            beta_cov: vec![],
            sigma: vec![],
        }
    }

    fn layout(k: usize, nu_free: bool) -> ParameterLayout {
        ParameterLayout {
            n_features: k,
            n_covariates: 0,
            nu_free,
            gaussian: false,
        }
    }

    #[test]
    fn al_contribution_at_peak() {
        // With all beta = 0, tau0 = 1, nu0 = 0.5 and one feature, the
        // effect-prior contribution is log(1/4): the difference between the
        // full log-prior and the same sum without the beta term.
        let cfg = PriorConfig::default();
        let pv = vector(1, 0.0);
        let full = log_prior(&pv, &layout(1, true), &cfg);
        let without_beta = dist::halfnormal_logpdf(1.0, 1.0)
            + dist::trunc01_laplace_logpdf(0.5, 0.5, 0.05)
            + dist::normal_logpdf(0.0, 0.0, 5.0)
            + dist::normal_logpdf(2.0, 2.0, 2.0);
        assert_abs_diff_eq!(full - without_beta, 0.25f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn fixed_symmetric_drops_only_the_hyperprior_term() {
        let free_cfg = PriorConfig::default();
        let symm_cfg = PriorConfig::preset(PriorPreset::Symm);
        let pv = vector(3, 0.7);
        let free = log_prior(&pv, &layout(3, true), &free_cfg);
        let symm = log_prior(&pv, &layout(3, false), &symm_cfg);
        let nu_term = dist::trunc01_laplace_logpdf(0.5, 0.5, 0.05);
        assert_abs_diff_eq!(symm, free - nu_term, epsilon = 1e-12);
    }

    #[test]
    fn matches_term_by_term_oracle() {
        // Independent summation script: every closed-form log-density is
        // re-derived from statrs (plus the piecewise asymmetric-Laplace
        // form) instead of the dist module's formulas.
        use statrs::distribution::{Continuous, Laplace, Normal};
        let cfg = PriorConfig::default();
        let lay = ParameterLayout {
            n_features: 3,
            n_covariates: 2,
            nu_free: true,
            gaussian: false,
        };
        let pv = ParameterVector {
            tau0: 0.8,
            nu0: 0.43,
            alpha: vec![0.2, -1.1, 3.0],
            beta: vec![0.5, -0.25, 1.9],
            beta_reads: vec![1.0, 2.5, 2.0],
            beta_cov: vec![0.1, -0.2, 0.3, -0.4, 0.5, -0.6],
            sigma: vec![],
        };

        let mut oracle = 0.0;
        // half-normal = doubled normal on the nonnegative half-line
        oracle += 2f64.ln() + Normal::new(0.0, 1.0).unwrap().ln_pdf(0.8);
        // truncated Laplace: renormalize by the (0,1) mass
        let lap = Laplace::new(0.5, 0.05).unwrap();
        let mass = {
            let cdf = |x: f64| {
                if x < 0.5 {
                    0.5 * ((x - 0.5) / 0.05).exp()
                } else {
                    1.0 - 0.5 * ((0.5 - x) / 0.05).exp()
                }
            };
            cdf(1.0) - cdf(0.0)
        };
        oracle += lap.ln_pdf(0.43) - mass.ln();
        // asymmetric Laplace via the explicit piecewise exponential form
        for &b in &pv.beta {
            let (tau, nu) = (0.8, 0.43);
            let dens = if b < 0.0 {
                nu * (1.0 - nu) / tau * ((1.0 - nu) * b / tau).exp()
            } else {
                nu * (1.0 - nu) / tau * (-nu * b / tau).exp()
            };
            oracle += dens.ln();
        }
        let n_alpha = Normal::new(0.0, 5.0).unwrap();
        let n_reads = Normal::new(2.0, 2.0).unwrap();
        let n_cov = Normal::new(0.0, 1.0).unwrap();
        for j in 0..3 {
            oracle += n_alpha.ln_pdf(pv.alpha[j]);
            oracle += n_reads.ln_pdf(pv.beta_reads[j]);
            for m in 0..2 {
                oracle += n_cov.ln_pdf(pv.beta_cov[j * 2 + m]);
            }
        }

        assert_abs_diff_eq!(log_prior(&pv, &lay, &cfg), oracle, epsilon = 1e-10);
    }

    #[test]
    fn symmetric_beta_prior_is_sign_invariant() {
        let cfg = PriorConfig::preset(PriorPreset::Symm);
        let lay = layout(2, false);
        let plus = vector(2, 1.3);
        let mut minus = plus.clone();
        minus.beta = vec![-1.3; 2];
        assert_abs_diff_eq!(
            log_prior(&plus, &lay, &cfg),
            log_prior(&minus, &lay, &cfg),
            epsilon = 1e-12
        );
    }

    #[test]
    fn presets_have_documented_settings() {
        assert_eq!(PriorConfig::preset(PriorPreset::Wide).tau0_scale, 2.0);
        assert_eq!(PriorConfig::preset(PriorPreset::Narrow).tau0_scale, 0.5);
        assert_eq!(
            PriorConfig::preset(PriorPreset::Skewed).nu_mode,
            NuMode::BetaHyperprior
        );
        assert_eq!(
            PriorConfig::preset(PriorPreset::Symm).nu_mode,
            NuMode::FixedSymmetric
        );
        for p in PriorPreset::ALL {
            PriorConfig::preset(p).validate().unwrap();
        }
    }

    #[test]
    fn config_json_roundtrip() {
        let cfg = PriorConfig::preset(PriorPreset::Skewed);
        let json = serde_json::to_string(&cfg).unwrap();
        let back: PriorConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }
}
