use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::{cross_gram, gram, GramMatrix};
use crate::kernel::KernelDescriptor;
use crate::linalg::{add_diagonal, spd_solve};

/// Dual weights `α = (K + λI)⁻¹ y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrrFit {
    pub alpha: DVector<f64>,
    pub lambda: f64,
}

pub(crate) fn check_lambda(name: &'static str, lambda: f64) -> Result<()> {
    if lambda > 0.0 && !lambda.is_nan() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("ridge parameter must be > 0, got {lambda}")))
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { context, expected, got })
    }
}

/// Solves `(K + λI)α = y` through a Cholesky factorization. `λ = 0` is rejected.
pub fn fit_krr(gram: &GramMatrix, y_tr: &DVector<f64>, lambda: f64) -> Result<KrrFit> {
    check_lambda("lambda", lambda)?;
    check_len("fit_krr responses", gram.n(), y_tr.len())?;
    let alpha = spd_solve(&add_diagonal(gram.matrix(), lambda), y_tr)?;
    Ok(KrrFit { alpha, lambda })
}

/// `K(X_ts, X_tr)·α` given the cross-kernel matrix.
pub fn predict_krr(fit: &KrrFit, cross: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_len("predict_krr cross-kernel columns", fit.alpha.len(), cross.ncols())?;
    Ok(cross * &fit.alpha)
}

/// Kernel ridge regression that keeps its kernel and training inputs.
#[derive(Debug, Clone)]
pub struct KernelRidge {
    kernel: KernelDescriptor,
    x_tr: DMatrix<f64>,
    fit: KrrFit,
}

impl KernelRidge {
    pub fn fit(kernel: &KernelDescriptor, x_tr: &DMatrix<f64>, y_tr: &DVector<f64>, lambda: f64) -> Result<Self> {
        let k = gram(kernel, x_tr)?;
        Ok(Self {
            kernel: kernel.clone(),
            x_tr: x_tr.clone(),
            fit: fit_krr(&k, y_tr, lambda)?,
        })
    }

    pub fn predict(&self, x_ts: &DMatrix<f64>) -> Result<DVector<f64>> {
        predict_krr(&self.fit, &cross_gram(&self.kernel, x_ts, &self.x_tr)?)
    }

    pub fn dual(&self) -> &KrrFit {
        &self.fit
    }
}
