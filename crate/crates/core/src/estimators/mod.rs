//! Closed-form kernel ridge regression, the equivalent regularized linear
//! model, gradient-descent trajectories for both, and Gaussian-process
//! posterior quantities.

pub mod dynamics;
pub mod gp;
pub mod krr;
pub mod linear;
pub mod metrics;

pub use dynamics::{gd_kernel_trajectory, gd_linear_trajectory, scaled_linear_system, ModelKind, SpectralSystem, Trajectory};
pub use gp::{gp_posterior, gp_posterior_from_blocks, linear_risk, GpPosterior};
pub use krr::{fit_krr, predict_krr, KernelRidge, KrrFit};
pub use linear::{
    equivalent_regularizers, equivalent_regularizers_or_drop_bias, fit_linear_ridge, EquivalentRegularizers, LinearFit,
};
pub use metrics::{normalized_test_error, prediction_gap};
