//! Closed-form full-batch gradient descent from zero initialization.
//!
//! For a system matrix `S` (symmetric positive definite) and cross matrix `C`,
//! the test predictions after `t` steps with learning rate `η` are
//!
//! ```text
//! f_t = C·S⁻¹·(I − (I − ηS)ᵗ)·y
//! ```
//!
//! evaluated through one eigendecomposition `S = QΛQᵀ` so each step costs only
//! scalar powers of the eigenvalues.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::krr::{check_lambda, check_len};
use super::linear::equivalent_regularizers;
use crate::error::{Error, Result};
use crate::gram::GramMatrix;
use crate::linalg::{add_diagonal, sym_eigen};
use crate::linearization::SurrogateCoefficients;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Kernel,
    ScaledLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<u64>,
    pub predictions: Vec<DVector<f64>>,
    pub eta: f64,
    pub model_kind: ModelKind,
}

impl Trajectory {
    pub fn at(&self, t: u64) -> Option<&DVector<f64>> {
        self.steps.iter().position(|&s| s == t).map(|i| &self.predictions[i])
    }
}

/// Eigendecomposed system matrix, reusable across learning rates and step lists.
#[derive(Debug, Clone)]
pub struct SpectralSystem {
    values: DVector<f64>,
    /// `C·Q`
    cross_q: DMatrix<f64>,
    /// `Qᵀ·y`
    qty: DVector<f64>,
}

impl SpectralSystem {
    pub fn new(system: &DMatrix<f64>, cross: &DMatrix<f64>, y: &DVector<f64>) -> Result<Self> {
        check_len("trajectory responses", system.nrows(), y.len())?;
        check_len("trajectory cross columns", system.nrows(), cross.ncols())?;
        let (values, q) = sym_eigen(system)?;
        if values.len() > 0 && values[0] <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: values[0],
            });
        }
        Ok(Self {
            cross_q: cross * &q,
            qty: q.tr_mul(y),
            values,
        })
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `1/λ_max(S)`.
    pub fn default_eta(&self) -> f64 {
        1.0 / self.max_eigenvalue()
    }

    /// `max |1 − ηλᵢ|`.
    pub fn spectral_radius(&self, eta: f64) -> f64 {
        self.values.iter().map(|l| (1.0 - eta * l).abs()).fold(0.0, f64::max)
    }

    pub fn predictions(&self, eta: f64, t: u64) -> DVector<f64> {
        let tf = t as f64;
        let coef = DVector::from_fn(self.values.len(), |i, _| {
            let l = self.values[i];
            let decay = if t == 0 { 1.0 } else { (1.0 - eta * l).powf(tf) };
            (1.0 - decay) / l * self.qty[i]
        });
        &self.cross_q * coef
    }

    /// The `t → ∞` limit `C·S⁻¹·y`.
    pub fn limit(&self) -> DVector<f64> {
        let coef = DVector::from_fn(self.values.len(), |i, _| self.qty[i] / self.values[i]);
        &self.cross_q * coef
    }

    pub fn trajectory(&self, eta: Option<f64>, steps: &[u64], model_kind: ModelKind) -> Result<Trajectory> {
        let eta = eta.unwrap_or_else(|| self.default_eta());
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::invalid("eta", format!("learning rate must be > 0, got {eta}")));
        }
        let rho = self.spectral_radius(eta);
        if rho >= 1.0 {
            log::warn!("gradient descent is not contractive: spectral radius of I - eta*S is {rho}");
        }
        Ok(Trajectory {
            steps: steps.to_vec(),
            predictions: steps.iter().map(|&t| self.predictions(eta, t)).collect(),
            eta,
            model_kind,
        })
    }
}

/// Kernel gradient descent: `S = K + λI`, `C = K(X_ts, X_tr)`.
pub fn gd_kernel_trajectory(
    gram: &GramMatrix,
    cross: &DMatrix<f64>,
    y_tr: &DVector<f64>,
    lambda: f64,
    eta: Option<f64>,
    steps: &[u64],
) -> Result<Trajectory> {
    check_lambda("lambda", lambda)?;
    SpectralSystem::new(&add_diagonal(gram.matrix(), lambda), cross, y_tr)?.trajectory(eta, steps, ModelKind::Kernel)
}

/// System and cross matrices of the scaled linear model
/// `f(x) = γ₂wᵀx + γ₁b` with `γ₁ = √c₁`, `γ₂ = √(c₂/p)` and penalties from
/// [`equivalent_regularizers`]:
/// `S = γ₂²XXᵀ + γ₁²11ᵀ + γ₂²λ₂I`, `C = γ₂²X_tsXᵀ + γ₁²1ᵀ`.
pub fn scaled_linear_system(
    x_tr: &DMatrix<f64>,
    x_ts: &DMatrix<f64>,
    coeffs: &SurrogateCoefficients,
    lambda: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_len("scaled linear feature dimension", x_tr.ncols(), x_ts.ncols())?;
    let p = x_tr.ncols();
    let (_lambda1, lambda2) = equivalent_regularizers(lambda, coeffs, p)?;
    let g1sq = coeffs.c1;
    let g2sq = coeffs.c2 / p as f64;
    let mut system = x_tr * x_tr.transpose() * g2sq;
    system.apply(|v| *v += g1sq);
    let system = add_diagonal(&system, g2sq * lambda2);
    let system = (&system + system.transpose()) * 0.5;
    let mut cross = x_ts * x_tr.transpose() * g2sq;
    cross.apply(|v| *v += g1sq);
    Ok((system, cross))
}

pub fn gd_linear_trajectory(
    x_tr: &DMatrix<f64>,
    x_ts: &DMatrix<f64>,
    y_tr: &DVector<f64>,
    coeffs: &SurrogateCoefficients,
    lambda: f64,
    eta: Option<f64>,
    steps: &[u64],
) -> Result<Trajectory> {
    let (system, cross) = scaled_linear_system(x_tr, x_ts, coeffs, lambda)?;
    SpectralSystem::new(&system, &cross, y_tr)?.trajectory(eta, steps, ModelKind::ScaledLinear)
}
