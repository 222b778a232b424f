//! The hierarchical differential-prevalence model: prior hierarchy,
//! likelihoods, and the unconstrained joint log-posterior with analytic
//! gradient.

pub mod dist;
mod likelihood;
mod params;
mod posterior;
mod prior;

pub use dist::{al_logpdf, al_rho, sample_al};
pub use likelihood::{log_likelihood, standardized_log_abundance, Likelihood};
pub use params::{
    init_params, inverse_transform, transform_params, ParameterLayout, ParameterVector,
};
pub use posterior::DpaModel;
pub use prior::{log_prior, NuMode, PriorConfig, PriorPreset};
