//! Dense symmetric linear algebra shared by the estimators and the linearization.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::rng_from_seed;

/// Relative residual tolerance for power iteration.
pub const POWER_TOL: f64 = 1e-8;
pub const POWER_MAX_ITERS: usize = 1000;
/// Largest size for which the dense eigendecomposition fallback is used.
pub const EIGEN_FALLBACK_MAX_N: usize = 2000;

pub(crate) fn check_square(a: &DMatrix<f64>, context: &'static str) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            context,
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    Ok(a.nrows())
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    a.clone().symmetric_eigenvalues().min()
}

/// Cholesky factorization, reporting the minimum eigenvalue on failure.
pub fn cholesky(a: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("system matrix"));
    }
    Cholesky::new(a.clone()).ok_or_else(|| Error::NotPositiveDefinite {
        min_eigenvalue: min_eigenvalue(a),
    })
}

/// `A x = b` for symmetric positive-definite `A`.
pub fn spd_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = check_square(a, "spd_solve")?;
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            context: "spd_solve rhs",
            expected: n,
            got: b.len(),
        });
    }
    Ok(cholesky(a)?.solve(b))
}

/// Adds `shift` to the diagonal.
pub fn add_diagonal(a: &DMatrix<f64>, shift: f64) -> DMatrix<f64> {
    let mut out = a.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += shift;
    }
    out
}

/// Eigenvalues ascending with matching eigenvector columns.
pub fn sym_eigen(a: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_square(a, "sym_eigen")?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigendecomposition input"));
    }
    let SymmetricEigen {
        eigenvalues,
        eigenvectors,
    } = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eigenvalues[i].total_cmp(&eigenvalues[j]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eigenvalues[i]));
    let vectors = DMatrix::from_fn(a.nrows(), order.len(), |r, c| eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Largest row sum of absolute values; bounds every eigenvalue magnitude.
pub fn gershgorin_bound(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Top eigenvalue of a symmetric matrix whose spectrum is nonnegative.
fn power_top(a: &DMatrix<f64>, seed: u64) -> Result<(f64, usize)> {
    let n = a.nrows();
    let mut rng = rng_from_seed(seed);
    let mut v = DVector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    });
    v /= v.norm();
    let mut residual = f64::INFINITY;
    for iter in 1..=POWER_MAX_ITERS {
        let w = a * &v;
        let theta = v.dot(&w);
        residual = (&w - theta * &v).norm();
        if residual <= POWER_TOL * theta.abs() || theta == 0.0 {
            return Ok((theta, iter));
        }
        let norm = w.norm();
        if norm == 0.0 {
            return Ok((0.0, iter));
        }
        v = w / norm;
    }
    Err(Error::NoConvergence {
        iterations: POWER_MAX_ITERS,
        residual,
    })
}

/// How an operator norm was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    PowerIteration { iterations: usize },
    /// Power iteration stalled at `residual`; value comes from a full eigendecomposition.
    EigenFallback { residual: f64 },
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorNorm {
    pub value: f64,
    pub method: NormMethod,
}

/// Largest absolute eigenvalue of a symmetric matrix via power iteration.
///
/// The sign ambiguity is removed by running on the two Gershgorin-shifted
/// matrices `D + G·I` and `G·I − D`, both positive semidefinite.
pub fn sym_operator_norm_power(d: &DMatrix<f64>) -> Result<OperatorNorm> {
    let n = check_square(d, "operator norm")?;
    if n == 0 {
        return Ok(OperatorNorm {
            value: 0.0,
            method: NormMethod::Exact,
        });
    }
    let g = gershgorin_bound(d);
    if g == 0.0 {
        return Ok(OperatorNorm {
            value: 0.0,
            method: NormMethod::Exact,
        });
    }
    let (top, it1) = power_top(&add_diagonal(d, g), 0x5eed_0001)?;
    let (bottom, it2) = power_top(&add_diagonal(&(-d), g), 0x5eed_0002)?;
    let value = (top - g).max(bottom - g).max(0.0);
    Ok(OperatorNorm {
        value,
        method: NormMethod::PowerIteration {
            iterations: it1 + it2,
        },
    })
}

/// Power iteration with a mandatory dense fallback for `n ≤ 2000`.
pub fn sym_operator_norm(d: &DMatrix<f64>) -> Result<OperatorNorm> {
    match sym_operator_norm_power(d) {
        Ok(r) => Ok(r),
        Err(Error::NoConvergence { residual, .. }) if d.nrows() <= EIGEN_FALLBACK_MAX_N => {
            Ok(OperatorNorm {
                value: exact_sym_operator_norm(d)?,
                method: NormMethod::EigenFallback { residual },
            })
        }
        Err(e) => Err(e),
    }
}

pub fn exact_sym_operator_norm(d: &DMatrix<f64>) -> Result<f64> {
    let (values, _) = sym_eigen(d)?;
    Ok(values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}
