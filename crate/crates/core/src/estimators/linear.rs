use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::krr::{check_lambda, check_len};
use crate::error::{Error, Result};
use crate::linalg::spd_solve;
use crate::linearization::SurrogateCoefficients;

/// `λ₁ = (c₀ + λ)/c₁`, `λ₂ = p(c₀ + λ)/c₂`.
///
/// Errors when `c₁ ≤ 0` or `c₂ ≤ 0`; see [`equivalent_regularizers_or_drop_bias`]
/// for the degenerate `c₁ = 0` case.
pub fn equivalent_regularizers(lambda: f64, coeffs: &SurrogateCoefficients, p: usize) -> Result<(f64, f64)> {
    check_lambda("lambda", lambda)?;
    if !(coeffs.c1 > 0.0) {
        return Err(Error::NoLinearEquivalent(format!("c1 = {} <= 0", coeffs.c1)));
    }
    if !(coeffs.c2 > 0.0) {
        return Err(Error::NoLinearEquivalent(format!("c2 = {} <= 0", coeffs.c2)));
    }
    let shifted = coeffs.c0 + lambda;
    Ok((shifted / coeffs.c1, p as f64 * shifted / coeffs.c2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalentRegularizers {
    /// `+∞` when the bias is dropped.
    pub lambda1: f64,
    pub lambda2: f64,
    pub bias_dropped: bool,
}

/// Like [`equivalent_regularizers`], but with `c₁ = 0` the bias is dropped
/// (`λ₁ = +∞`, so `b = 0`) and the result is flagged.
pub fn equivalent_regularizers_or_drop_bias(
    lambda: f64,
    coeffs: &SurrogateCoefficients,
    p: usize,
) -> Result<EquivalentRegularizers> {
    if coeffs.c1 == 0.0 && coeffs.c2 > 0.0 {
        check_lambda("lambda", lambda)?;
        return Ok(EquivalentRegularizers {
            lambda1: f64::INFINITY,
            lambda2: p as f64 * (coeffs.c0 + lambda) / coeffs.c2,
            bias_dropped: true,
        });
    }
    let (lambda1, lambda2) = equivalent_regularizers(lambda, coeffs, p)?;
    Ok(EquivalentRegularizers {
        lambda1,
        lambda2,
        bias_dropped: false,
    })
}

/// Ridge regression with separate penalties: `λ₁|b|² + λ₂‖w‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub w: DVector<f64>,
    pub b: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl LinearFit {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        check_len("linear predict features", self.w.len(), x.ncols())?;
        Ok((x * &self.w).add_scalar(self.b))
    }
}

/// Minimizes `Σ(yᵢ − wᵀxᵢ − b)² + λ₁|b|² + λ₂‖w‖²` in the dual:
/// one `n×n` solve of `[XXᵀ/λ₂ + 11ᵀ/λ₁ + I]u = y`, then `w = Xᵀu/λ₂`, `b = 1ᵀu/λ₁`.
/// `λ₁ = +∞` fixes `b = 0`.
pub fn fit_linear_ridge(x_tr: &DMatrix<f64>, y_tr: &DVector<f64>, lambda1: f64, lambda2: f64) -> Result<LinearFit> {
    check_lambda("lambda1", lambda1)?;
    check_lambda("lambda2", lambda2)?;
    if lambda2.is_infinite() {
        return Err(Error::invalid("lambda2", "must be finite"));
    }
    let n = x_tr.nrows();
    check_len("fit_linear_ridge responses", n, y_tr.len())?;
    let inv1 = 1.0 / lambda1;
    let mut s = x_tr * x_tr.transpose() / lambda2;
    s.apply(|v| *v += inv1);
    for i in 0..n {
        s[(i, i)] += 1.0;
    }
    let s = (&s + s.transpose()) * 0.5;
    let u = spd_solve(&s, y_tr)?;
    Ok(LinearFit {
        w: x_tr.tr_mul(&u) / lambda2,
        b: u.sum() * inv1,
        lambda1,
        lambda2,
    })
}
