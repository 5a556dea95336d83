//! Gram and cross-kernel matrix assembly.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::KernelDescriptor;

/// Rows per parallel work block.
pub const BLOCK_ROWS: usize = 64;

/// Symmetric `n×n` kernel matrix built from one triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
}

impl GramMatrix {
    /// Wraps a matrix that is already exactly symmetric.
    pub fn from_symmetric(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "GramMatrix::from_symmetric",
                expected: n,
                got: entries.ncols(),
            });
        }
        for j in 0..n {
            for i in 0..j {
                if entries[(i, j)].to_bits() != entries[(j, i)].to_bits() {
                    return Err(Error::invalid("entries", "matrix is not exactly symmetric"));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }
}

/// Row-major copy of a feature matrix for contiguous row access.
pub(crate) struct Rows {
    data: Vec<f64>,
    pub n: usize,
    pub p: usize,
}

impl Rows {
    pub fn new(x: &DMatrix<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix"));
        }
        let mut data = Vec::with_capacity(n * p);
        for i in 0..n {
            data.extend(x.row(i).iter());
        }
        Ok(Self { data, n, p })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    /// `‖xᵢ‖²/p` for each row.
    pub fn scaled_norms(&self) -> Vec<f64> {
        let p = self.p as f64;
        (0..self.n).map(|i| dot(self.row(i), self.row(i)) / p).collect()
    }
}

/// Left-to-right accumulation; the order is part of the reproducibility contract.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

fn check_dims(x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::invalid("X", "need at least one row"));
    }
    if x.ncols() == 0 {
        return Err(Error::invalid("X", "need at least one column"));
    }
    Ok(())
}

fn check_norms(kernel: &KernelDescriptor, norms: &[f64]) -> Result<()> {
    if kernel.requires_positive_norms() {
        if let Some(row) = norms.iter().position(|&z| z <= 0.0) {
            return Err(Error::ZeroNorm {
                kernel: kernel.name().to_string(),
                row,
            });
        }
    }
    Ok(())
}

/// Builds the symmetric matrix `F[i][j] = f(zᵢ, ⟨xᵢ,xⱼ⟩/p, zⱼ, i == j)` from the
/// upper triangle, in parallel blocks of [`BLOCK_ROWS`] rows.
pub(crate) fn symmetric_pairwise<F>(rows: &Rows, norms: &[f64], f: F) -> DMatrix<f64>
where
    F: Fn(f64, f64, f64, bool) -> f64 + Sync,
{
    let n = rows.n;
    let p = rows.p as f64;
    let blocks: Vec<Vec<Vec<f64>>> = (0..n.div_ceil(BLOCK_ROWS))
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK_ROWS;
            let end = (start + BLOCK_ROWS).min(n);
            (start..end)
                .map(|i| {
                    let xi = rows.row(i);
                    (i..n)
                        .map(|j| {
                            let z2 = if i == j { norms[i] } else { dot(xi, rows.row(j)) / p };
                            f(norms[i], z2, norms[j], i == j)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut out = DMatrix::zeros(n, n);
    for (b, block) in blocks.into_iter().enumerate() {
        for (offset, row) in block.into_iter().enumerate() {
            let i = b * BLOCK_ROWS + offset;
            for (k, v) in row.into_iter().enumerate() {
                let j = i + k;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
    }
    out
}

/// `K[i][j] = g(‖xᵢ‖²/p, ⟨xᵢ,xⱼ⟩/p, ‖xⱼ‖²/p)` for the rows of `x`.
pub fn gram(kernel: &KernelDescriptor, x: &DMatrix<f64>) -> Result<GramMatrix> {
    check_dims(x)?;
    let rows = Rows::new(x)?;
    let norms = rows.scaled_norms();
    check_norms(kernel, &norms)?;
    let entries = symmetric_pairwise(&rows, &norms, |a, b, c, _| kernel.eval(a, b, c));
    if entries.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gram entries"));
    }
    Ok(GramMatrix { entries })
}

/// Rectangular kernel matrix between the rows of `x1` (`n₁×p`) and `x2` (`n₂×p`).
pub fn cross_gram(kernel: &KernelDescriptor, x1: &DMatrix<f64>, x2: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_dims(x1)?;
    check_dims(x2)?;
    if x1.ncols() != x2.ncols() {
        return Err(Error::DimensionMismatch {
            context: "cross_gram feature dimension",
            expected: x1.ncols(),
            got: x2.ncols(),
        });
    }
    let r1 = Rows::new(x1)?;
    let r2 = Rows::new(x2)?;
    let n1s = r1.scaled_norms();
    let n2s = r2.scaled_norms();
    check_norms(kernel, &n1s)?;
    check_norms(kernel, &n2s)?;
    let p = r1.p as f64;
    let rows: Vec<Vec<f64>> = (0..r1.n)
        .into_par_iter()
        .map(|i| {
            let xi = r1.row(i);
            (0..r2.n)
                .map(|j| kernel.eval(n1s[i], dot(xi, r2.row(j)) / p, n2s[j]))
                .collect()
        })
        .collect();
    let out = DMatrix::from_fn(r1.n, r2.n, |i, j| rows[i][j]);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cross-gram entries"));
    }
    Ok(out)
}

/// `K(x, x)` for each row.
pub fn diagonal(kernel: &KernelDescriptor, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let rows = Rows::new(x)?;
    let norms = rows.scaled_norms();
    check_norms(kernel, &norms)?;
    Ok(norms.iter().map(|&z| kernel.eval(z, z, z)).collect())
}
