//! Regression, forecasting, simulation and diagnostics for multivariate
//! Gaussian Markov processes with stationary increments.
//!
//! The central object is the covariance kernel `Γ(t, s) = s(α − βt)` for
//! `s <= t`. Its parameters have closed-form maximum-likelihood estimators
//! ([`estimate::fit`]) that can be updated one sample at a time
//! ([`estimate::update`]), and its posterior moments beyond the last sample
//! are affine in time ([`forecast`]).

pub mod diagnostics;
pub mod error;
pub mod estimate;
pub mod forecast;
pub mod kernel;
pub mod linalg;
pub mod simulate;

pub use diagnostics::{empirical_increment_autocorr, increment_autocorr, AutocorrReport};
pub use error::{Error, Result};
pub use estimate::{bridge_fit, fit, loglik, update, FitReport, SampleSet};
pub use forecast::{forecast_path, max_horizon, posterior_cov, posterior_mean, Forecast, HorizonBound};
pub use kernel::{
    bridge_moments, conditional_moments, drift_mu0, gram, kernel_eval, semiparam_f, semiparam_kernel,
    KernelParams, SemiParamModel, TimeGrid,
};
pub use simulate::{empirical_cov, euler_maruyama, sample_bridge, sample_paths, Method, PathBatch};
