use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::krr::{check_lambda, check_len};
use crate::error::Result;
use crate::gram::{cross_gram, diagonal, gram};
use crate::kernel::KernelDescriptor;
use crate::linalg::{add_diagonal, cholesky};

/// Posterior of `y_ts | y_tr` under `y = f + ξ`, `f ~ GP(0, K)`, `ξ ~ N(0, σ²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpPosterior {
    pub mean: DVector<f64>,
    /// Predictive variance of a noisy test response, `σ² + K(x,x) − kᵀ(K + σ²I)⁻¹k`.
    pub variance: DVector<f64>,
    pub sigma2: f64,
}

/// Posterior from precomputed blocks: training Gram `k_tr`, `cross = K(X_ts, X_tr)`
/// and the test diagonal `K(x, x)`.
pub fn gp_posterior_from_blocks(
    k_tr: &DMatrix<f64>,
    cross: &DMatrix<f64>,
    k_ts_diag: &[f64],
    y_tr: &DVector<f64>,
    sigma2: f64,
) -> Result<GpPosterior> {
    check_lambda("sigma2", sigma2)?;
    check_len("gp responses", k_tr.nrows(), y_tr.len())?;
    check_len("gp cross columns", k_tr.nrows(), cross.ncols())?;
    check_len("gp test diagonal", cross.nrows(), k_ts_diag.len())?;
    let chol = cholesky(&add_diagonal(k_tr, sigma2))?;
    let mean = cross * chol.solve(y_tr);
    // columns of L⁻¹·Kᵀ_cross
    let mut v = cross.transpose();
    // only the lower triangle of the packed factor is read
    chol.l_dirty().solve_lower_triangular_mut(&mut v);
    let variance = DVector::from_fn(cross.nrows(), |i, _| sigma2 + k_ts_diag[i] - v.column(i).norm_squared());
    Ok(GpPosterior { mean, variance, sigma2 })
}

/// Mean `K(X_ts,X_tr)(K + σ²I)⁻¹y` and per-point predictive variance.
/// With no training rows the prior is returned.
pub fn gp_posterior(
    kernel: &KernelDescriptor,
    x_tr: &DMatrix<f64>,
    y_tr: &DVector<f64>,
    x_ts: &DMatrix<f64>,
    sigma2: f64,
) -> Result<GpPosterior> {
    check_lambda("sigma2", sigma2)?;
    let k_ts = diagonal(kernel, x_ts)?;
    if x_tr.nrows() == 0 {
        check_len("gp responses", 0, y_tr.len())?;
        return Ok(GpPosterior {
            mean: DVector::zeros(x_ts.nrows()),
            variance: DVector::from_iterator(k_ts.len(), k_ts.iter().map(|k| k + sigma2)),
            sigma2,
        });
    }
    let k = gram(kernel, x_tr)?;
    let cross = cross_gram(kernel, x_ts, x_tr)?;
    gp_posterior_from_blocks(k.matrix(), &cross, &k_ts, y_tr, sigma2)
}

/// `E_lin = σ²_ts + (ŷ_ts − f_lin)²` per test point.
pub fn linear_risk(posterior: &GpPosterior, f_lin: &DVector<f64>) -> Result<DVector<f64>> {
    check_len("linear_risk predictions", posterior.mean.len(), f_lin.len())?;
    Ok(DVector::from_fn(f_lin.len(), |i, _| {
        let d = posterior.mean[i] - f_lin[i];
        posterior.variance[i] + d * d
    }))
}
