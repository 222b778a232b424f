//! Parameter vector layout and the unconstrained reparameterization.
//!
//! The flattened layout is fixed: hyperparameters first, then one contiguous
//! block per feature in feature order.
//!
//! ```text
//! [ z_tau0, (z_nu0)?,
//!   alpha_0, beta_0, beta_reads_0, cov_{0,0} .. cov_{0,M-1}, (z_sigma_0)?,
//!   alpha_1, ... ]
//! ```
//!
//! `z_nu0` is present unless the skewness is fixed at 1/2; `z_sigma_j` is
//! present only for the Gaussian likelihood. Total length is
//! `(1 or 2) + K * (3 + M (+1))`. Scale-type parameters map through `exp`,
//! the skewness through the logistic function; the corresponding
//! log-Jacobians are added by the posterior.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterLayout {
    pub n_features: usize,
    pub n_covariates: usize,
    /// Whether the skewness hyperparameter is sampled (false when fixed at 1/2).
    pub nu_free: bool,
    /// Whether per-feature residual scales are present (Gaussian likelihood).
    pub gaussian: bool,
}

impl ParameterLayout {
    pub fn hyper_len(&self) -> usize {
        1 + usize::from(self.nu_free)
    }

    pub fn block_len(&self) -> usize {
        3 + self.n_covariates + usize::from(self.gaussian)
    }

    pub fn dim(&self) -> usize {
        self.hyper_len() + self.n_features * self.block_len()
    }

    pub fn idx_tau0(&self) -> usize {
        0
    }

    /// Index of `z_nu0`; only meaningful when `nu_free`.
    pub fn idx_nu0(&self) -> usize {
        1
    }

    fn block_start(&self, j: usize) -> usize {
        self.hyper_len() + j * self.block_len()
    }

    pub fn idx_alpha(&self, j: usize) -> usize {
        self.block_start(j)
    }

    pub fn idx_beta(&self, j: usize) -> usize {
        self.block_start(j) + 1
    }

    pub fn idx_beta_reads(&self, j: usize) -> usize {
        self.block_start(j) + 2
    }

    pub fn idx_beta_cov(&self, j: usize, m: usize) -> usize {
        self.block_start(j) + 3 + m
    }

    /// Index of `z_sigma_j`; only meaningful when `gaussian`.
    pub fn idx_sigma(&self, j: usize) -> usize {
        self.block_start(j) + 3 + self.n_covariates
    }

    /// Human-readable parameter names in layout order.
    pub fn param_names(&self, feature_ids: &[String]) -> Vec<String> {
        assert_eq!(feature_ids.len(), self.n_features);
        let mut names = Vec::with_capacity(self.dim());
        names.push("tau0".to_string());
        if self.nu_free {
            names.push("nu0".to_string());
        }
        for id in feature_ids {
            names.push(format!("alpha[{id}]"));
            names.push(format!("beta[{id}]"));
            names.push(format!("beta_reads[{id}]"));
            for m in 0..self.n_covariates {
                names.push(format!("beta_cov{m}[{id}]"));
            }
            if self.gaussian {
                names.push(format!("sigma[{id}]"));
            }
        }
        names
    }
}

/// Constrained-scale view of one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub tau0: f64,
    /// Fixed at 0.5 when the layout has no free skewness.
    pub nu0: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub beta_reads: Vec<f64>,
    /// Flattened K x M, row-major by feature.
    pub beta_cov: Vec<f64>,
    /// Residual scales, empty unless Gaussian.
    pub sigma: Vec<f64>,
}

impl ParameterVector {
    pub fn beta_cov_at(&self, layout: &ParameterLayout, j: usize, m: usize) -> f64 {
        self.beta_cov[j * layout.n_covariates + m]
    }
}

pub fn logistic(z: f64) -> f64 {
    crate::stats::logistic(z)
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Maps an unconstrained vector to the constrained scale:
/// `tau0 = exp(z)`, `nu0 = logistic(z)`, `sigma_j = exp(z)`.
pub fn transform_params(z: &[f64], layout: &ParameterLayout) -> ParameterVector {
    assert_eq!(z.len(), layout.dim(), "vector length does not match layout");
    let k = layout.n_features;
    let m = layout.n_covariates;
    let tau0 = z[layout.idx_tau0()].exp();
    let nu0 = if layout.nu_free {
        logistic(z[layout.idx_nu0()])
    } else {
        0.5
    };
    let mut pv = ParameterVector {
        tau0,
        nu0,
        alpha: Vec::with_capacity(k),
        beta: Vec::with_capacity(k),
        beta_reads: Vec::with_capacity(k),
        beta_cov: Vec::with_capacity(k * m),
        sigma: Vec::with_capacity(if layout.gaussian { k } else { 0 }),
    };
    for j in 0..k {
        pv.alpha.push(z[layout.idx_alpha(j)]);
        pv.beta.push(z[layout.idx_beta(j)]);
        pv.beta_reads.push(z[layout.idx_beta_reads(j)]);
        for mm in 0..m {
            pv.beta_cov.push(z[layout.idx_beta_cov(j, mm)]);
        }
        if layout.gaussian {
            pv.sigma.push(z[layout.idx_sigma(j)].exp());
        }
    }
    pv
}

/// Inverse of [`transform_params`].
pub fn inverse_transform(pv: &ParameterVector, layout: &ParameterLayout) -> Vec<f64> {
    let mut z = vec![0.0; layout.dim()];
    z[layout.idx_tau0()] = pv.tau0.ln();
    if layout.nu_free {
        z[layout.idx_nu0()] = logit(pv.nu0);
    }
    for j in 0..layout.n_features {
        z[layout.idx_alpha(j)] = pv.alpha[j];
        z[layout.idx_beta(j)] = pv.beta[j];
        z[layout.idx_beta_reads(j)] = pv.beta_reads[j];
        for m in 0..layout.n_covariates {
            z[layout.idx_beta_cov(j, m)] = pv.beta_cov_at(layout, j, m);
        }
        if layout.gaussian {
            z[layout.idx_sigma(j)] = pv.sigma[j].ln();
        }
    }
    z
}

/// Per-chain starting point: each coordinate uniform on [-2, 2] on the
/// unconstrained scale, from an independent substream of `seed`.
pub fn init_params(seed: u64, chain: u64, layout: &ParameterLayout) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    (0..layout.dim()).map(|_| rng.random_range(-2.0..2.0)).collect()
}
