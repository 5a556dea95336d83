//! Kernel methods in the proportional high-dimensional regime.
//!
//! When the feature dimension `p` and the sample count `n` grow together, a
//! kernel matrix of the form `g(‖xᵢ‖²/p, ⟨xᵢ,xⱼ⟩/p, ‖xⱼ‖²/p)` collapses onto
//! `c₀I + c₁11ᵀ + (c₂/p)XXᵀ`. Consequently kernel ridge regression, and its
//! full gradient-descent path, behave like a ridge-regularized linear model
//! with a separately penalized bias. This crate computes both sides of that
//! correspondence so they can be compared numerically:
//!
//! - [`kernel`], [`gram`], [`ntk`]: kernels, Gram assembly, the ReLU NTK.
//! - [`linearization`]: surrogate coefficients, the surrogate matrix and
//!   operator-norm gap sweeps.
//! - [`estimators`]: kernel ridge, the equivalent linear model, closed-form
//!   gradient-descent trajectories, Gaussian-process posteriors.
//! - [`data_gen`]: seeded features and teachers.
//! - [`experiments`]: end-to-end runs emitting CSV records.
//!
//! ```
//! use kernel_equiv::{coefficients, equivalent_regularizers, make_polynomial_kernel, CovarianceSpec};
//!
//! let kernel = make_polynomial_kernel(0.1, 2).unwrap();
//! let c = coefficients(&kernel, &CovarianceSpec::identity(2000).unwrap()).unwrap();
//! let (lambda1, lambda2) = equivalent_regularizers(0.1, &c, 2000).unwrap();
//! assert!((lambda2 - 11000.0).abs() < 1e-9);
//! assert!((lambda1 - 1.1 / 0.0105).abs() < 1e-9);
//! ```

pub mod covariance;
pub mod data_gen;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod gram;
pub mod kernel;
pub mod linalg;
pub mod linearization;
pub mod ntk;
pub mod seeds;
pub mod stats;

pub use covariance::CovarianceSpec;
pub use data_gen::{
    gp_teacher_outputs, mixture_covariance, relu_teacher, sample_features, CovarianceFamily, Dataset, FeatureModel,
    ReluTeacher, TeacherSpec, ZDistribution,
};
pub use error::{Error, Result};
pub use estimators::*;
pub use gram::{cross_gram, gram, GramMatrix};
pub use kernel::{make_linear_kernel, make_ntk_kernel, make_polynomial_kernel, make_rbf_kernel, KernelDescriptor, KernelSpec};
pub use linearization::{
    coefficients, estimate_coefficients, gap_sweep, operator_norm_gap, surrogate_cross, surrogate_matrix, GapRecord,
    GapSweep, GapSweepConfig, SurrogateCoefficients,
};
pub use ntk::{empirical_ntk, kappa0, kappa1, ntk_recursion, ntk_value};
