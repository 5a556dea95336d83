//! Feature covariance `Σ` in the forms the generators and the linearization need.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::sym_eigen;

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Identity,
    Diagonal(Vec<f64>),
    Dense {
        matrix: Arc<DMatrix<f64>>,
        sqrt: Arc<DMatrix<f64>>,
    },
    /// `Σ = (1/k)·Σ_c S_c S_cᵀ` with `p×r` factors.
    LowRankMixture(Vec<Arc<DMatrix<f64>>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSpec {
    p: usize,
    kind: Kind,
}

impl CovarianceSpec {
    pub fn identity(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("p", "dimension must be positive"));
        }
        Ok(Self { p, kind: Kind::Identity })
    }

    pub fn scaled_identity(p: usize, scale: f64) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("p", "dimension must be positive"));
        }
        Self::diagonal(vec![scale; p])
    }

    pub fn diagonal(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("values", "dimension must be positive"));
        }
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("values", "diagonal covariance must be strictly positive"));
        }
        Ok(Self {
            p: values.len(),
            kind: Kind::Diagonal(values),
        })
    }

    /// Dense symmetric positive-definite `Σ`; its symmetric square root is computed here once.
    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        let p = matrix.nrows();
        if p == 0 || matrix.ncols() != p {
            return Err(Error::invalid("matrix", "must be square and non-empty"));
        }
        if (&matrix - matrix.transpose()).amax() > 1e-12 * matrix.amax().max(1.0) {
            return Err(Error::invalid("matrix", "must be symmetric"));
        }
        let (values, vectors) = sym_eigen(&matrix)?;
        if values[0] <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: values[0],
            });
        }
        let root = DMatrix::from_diagonal(&values.map(f64::sqrt));
        let sqrt = &vectors * root * vectors.transpose();
        let sqrt = (&sqrt + sqrt.transpose()) * 0.5;
        Ok(Self {
            p,
            kind: Kind::Dense {
                matrix: Arc::new(matrix),
                sqrt: Arc::new(sqrt),
            },
        })
    }

    /// Equal-weight mixture of `S_c S_cᵀ`; every factor must be `p×r` with the same shape.
    pub fn low_rank_mixture(factors: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| Error::invalid("factors", "need at least one component"))?;
        let (p, r) = first.shape();
        if p == 0 || r == 0 {
            return Err(Error::invalid("factors", "empty factor"));
        }
        if factors.iter().any(|f| f.shape() != (p, r)) {
            return Err(Error::invalid("factors", "all factors must share one shape"));
        }
        Ok(Self {
            p,
            kind: Kind::LowRankMixture(factors.into_iter().map(Arc::new).collect()),
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Identity => "identity",
            Kind::Diagonal(_) => "diagonal",
            Kind::Dense { .. } => "dense",
            Kind::LowRankMixture(_) => "low_rank_mixture",
        }
    }

    pub fn is_low_rank_mixture(&self) -> bool {
        matches!(self.kind, Kind::LowRankMixture(_))
    }

    pub fn mixture_factors(&self) -> Option<&[Arc<DMatrix<f64>>]> {
        match &self.kind {
            Kind::LowRankMixture(f) => Some(f),
            _ => None,
        }
    }

    pub(crate) fn diagonal_values(&self) -> Option<&[f64]> {
        match &self.kind {
            Kind::Diagonal(v) => Some(v),
            _ => None,
        }
    }

    pub(crate) fn dense_sqrt(&self) -> Option<&DMatrix<f64>> {
        match &self.kind {
            Kind::Dense { sqrt, .. } => Some(sqrt),
            _ => None,
        }
    }

    /// `τ = tr(Σ)/p`.
    pub fn trace_over_p(&self) -> f64 {
        let p = self.p as f64;
        match &self.kind {
            Kind::Identity => 1.0,
            Kind::Diagonal(v) => v.iter().sum::<f64>() / p,
            Kind::Dense { matrix, .. } => matrix.trace() / p,
            Kind::LowRankMixture(f) => {
                let k = f.len() as f64;
                f.iter().map(|s| s.norm_squared()).sum::<f64>() / (k * p)
            }
        }
    }

    /// `tr(Σ²)/p²`.
    pub fn trace_sq_over_p2(&self) -> f64 {
        let p = self.p as f64;
        match &self.kind {
            Kind::Identity => 1.0 / p,
            Kind::Diagonal(v) => v.iter().map(|x| x * x).sum::<f64>() / (p * p),
            Kind::Dense { matrix, .. } => matrix.norm_squared() / (p * p),
            Kind::LowRankMixture(f) => {
                // tr(Σ²) = (1/k²)·Σ_{c,d} ‖S_cᵀ S_d‖_F², using only r×r products.
                let k = f.len() as f64;
                let mut acc = 0.0;
                for a in f {
                    for b in f {
                        acc += (a.transpose() * b.as_ref()).norm_squared();
                    }
                }
                acc / (k * k * p * p)
            }
        }
    }

    /// The full `p×p` matrix.
    pub fn materialize(&self) -> DMatrix<f64> {
        match &self.kind {
            Kind::Identity => DMatrix::identity(self.p, self.p),
            Kind::Diagonal(v) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v)),
            Kind::Dense { matrix, .. } => matrix.as_ref().clone(),
            Kind::LowRankMixture(f) => {
                let k = f.len() as f64;
                let mut out = DMatrix::zeros(self.p, self.p);
                for s in f {
                    out += s.as_ref() * s.transpose();
                }
                let out = out / k;
                (&out + out.transpose()) * 0.5
            }
        }
    }
}
