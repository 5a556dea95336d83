//! Linearized surrogate of a random kernel matrix.
//!
//! In the proportional regime a kernel matrix `K` built from features with
//! covariance `Σ` is close in operator norm to
//!
//! ```text
//! M = c₀·I + c₁·11ᵀ + (c₂/p)·XXᵀ
//! ```
//!
//! where, with `τ = tr(Σ)/p` and `g′`, `g″` the partials in the middle argument,
//!
//! ```text
//! c₂ = g′(τ, 0, τ)
//! c₀ = g(τ, τ, τ) − g(τ, 0, τ) − c₂·τ
//! c₁ = g(τ, 0, τ) + g″(τ, 0, τ)·tr(Σ²)/(2p²)
//! ```
//!
//! [`gap_sweep`] measures `‖K − M‖` across dimensions.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceSpec;
use crate::data_gen::{sample_features, CovarianceFamily, FeatureModel};
use crate::error::{Error, Result};
use crate::gram::{dot, gram, symmetric_pairwise, Rows};
use crate::kernel::{KernelDescriptor, KernelSpec};
use crate::linalg::{check_square, sym_operator_norm, NormMethod};
use crate::seeds::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

/// Where `τ` and `tr(Σ²)/p²` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentSource {
    /// Computed from the known covariance.
    Specified,
    /// Plug-in estimates from a sample, no bias correction.
    PlugInEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateCoefficients {
    pub tau: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub derivative_mode: DerivativeMode,
    pub source: MomentSource,
}

/// Coefficients from the moments `τ = tr(Σ)/p` and `tr(Σ²)/p²`.
pub fn coefficients_from_moments(
    kernel: &KernelDescriptor,
    tau: f64,
    trace_sq_over_p2: f64,
) -> Result<SurrogateCoefficients> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid("tau", format!("must be positive, got {tau}")));
    }
    let g_diag = kernel.eval(tau, tau, tau);
    let g_off = kernel.eval(tau, 0.0, tau);
    let c2 = kernel.d_dz2(tau, 0.0, tau);
    let g2 = kernel.d2_dz2(tau, 0.0, tau);
    if ![g_diag, g_off, c2, g2].iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("kernel at expansion points"));
    }
    Ok(SurrogateCoefficients {
        tau,
        c0: g_diag - g_off - c2 * tau,
        c1: g_off + g2 * trace_sq_over_p2 / 2.0,
        c2,
        derivative_mode: if kernel.has_analytic_derivatives() {
            DerivativeMode::Analytic
        } else {
            DerivativeMode::FiniteDifference
        },
        source: MomentSource::Specified,
    })
}

/// Coefficients for `kernel` under the known covariance `cov`.
pub fn coefficients(kernel: &KernelDescriptor, cov: &CovarianceSpec) -> Result<SurrogateCoefficients> {
    coefficients_from_moments(kernel, cov.trace_over_p(), cov.trace_sq_over_p2())
}

/// Plug-in coefficients: `τ̂ = mean ‖xᵢ‖²/p` and `tr(Σ²)/p² ≈ mean_{i≠j} (⟨xᵢ,xⱼ⟩/p)²`.
pub fn estimate_coefficients(kernel: &KernelDescriptor, x: &DMatrix<f64>) -> Result<SurrogateCoefficients> {
    let rows = Rows::new(x)?;
    if rows.n < 2 {
        return Err(Error::invalid("X", "plug-in estimate needs at least two rows"));
    }
    let norms = rows.scaled_norms();
    let tau = norms.iter().sum::<f64>() / rows.n as f64;
    let p = rows.p as f64;
    let mut acc = 0.0;
    for i in 0..rows.n {
        for j in (i + 1)..rows.n {
            let z = dot(rows.row(i), rows.row(j)) / p;
            acc += z * z;
        }
    }
    let pairs = (rows.n * (rows.n - 1) / 2) as f64;
    let mut c = coefficients_from_moments(kernel, tau, acc / pairs)?;
    c.source = MomentSource::PlugInEstimate;
    Ok(c)
}

/// `M = c₀·I + c₁·11ᵀ + (c₂/p)·XXᵀ`, exactly symmetric. With `include_identity = false`
/// the `c₀·I` term is left out.
pub fn surrogate_matrix(coeffs: &SurrogateCoefficients, x: &DMatrix<f64>, include_identity: bool) -> Result<DMatrix<f64>> {
    let rows = Rows::new(x)?;
    let norms = rows.scaled_norms();
    let SurrogateCoefficients { c0, c1, c2, .. } = *coeffs;
    Ok(symmetric_pairwise(&rows, &norms, |_, z2, _, diag| {
        let v = c1 + c2 * z2;
        if diag && include_identity {
            v + c0
        } else {
            v
        }
    }))
}

/// Off-diagonal block `c₁·11ᵀ + (c₂/p)·X₁X₂ᵀ` between two point sets.
pub fn surrogate_cross(coeffs: &SurrogateCoefficients, x1: &DMatrix<f64>, x2: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x1.ncols() != x2.ncols() {
        return Err(Error::DimensionMismatch {
            context: "surrogate_cross feature dimension",
            expected: x1.ncols(),
            got: x2.ncols(),
        });
    }
    let p = x1.ncols() as f64;
    let mut out = x1 * x2.transpose();
    out.apply(|v| *v = coeffs.c1 + coeffs.c2 * (*v / p));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapEstimate {
    pub value: f64,
    pub method: NormMethod,
}

/// `‖A − B‖_op` for symmetric `A`, `B`.
pub fn operator_norm_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<GapEstimate> {
    let n = check_square(a, "operator_norm_gap")?;
    if b.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            context: "operator_norm_gap",
            expected: n,
            got: b.nrows(),
        });
    }
    let r = sym_operator_norm(&(a - b))?;
    Ok(GapEstimate {
        value: r.value,
        method: r.method,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSweepConfig {
    pub kernel: KernelSpec,
    #[serde(default)]
    pub covariance: CovarianceFamily,
    pub p_list: Vec<usize>,
    /// `n = round(β·p)`.
    pub beta: f64,
    pub trials: usize,
    pub seed: u64,
}

/// One CSV row: `p,n,trial,seed,gap_abs,gap_rel,kernel,beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub p: usize,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub gap_abs: f64,
    pub gap_rel: f64,
    pub kernel: String,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub p: usize,
    pub trial: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GapSweep {
    pub records: Vec<GapRecord>,
    pub failures: Vec<TrialFailure>,
}

impl GapSweep {
    /// Median relative gap at dimension `p`, if any trial succeeded there.
    pub fn median_relative_gap(&self, p: usize) -> Option<f64> {
        let v: Vec<f64> = self.records.iter().filter(|r| r.p == p).map(|r| r.gap_rel).collect();
        crate::stats::median(&v)
    }
}

/// Absolute and relative gap `‖K − M‖`, `‖K − M‖/‖K‖` for one sample.
pub fn kernel_surrogate_gap(kernel: &KernelDescriptor, cov: &CovarianceSpec, x: &DMatrix<f64>) -> Result<(f64, f64)> {
    let coeffs = coefficients(kernel, cov)?;
    let k = gram(kernel, x)?;
    let m = surrogate_matrix(&coeffs, x, true)?;
    let gap = operator_norm_gap(k.matrix(), &m)?.value;
    let k_norm = sym_operator_norm(k.matrix())?.value;
    Ok((gap, if k_norm > 0.0 { gap / k_norm } else { 0.0 }))
}

/// Gaussian-feature gaps for every `(p, trial)`; trials run in parallel with
/// seeds derived from `(seed, p, trial)`, and a failing trial is recorded
/// without stopping the sweep.
pub fn gap_sweep(config: &GapSweepConfig) -> Result<GapSweep> {
    if !(config.beta > 0.0) {
        return Err(Error::invalid("beta", "must be positive"));
    }
    if config.p_list.is_empty() || config.trials == 0 {
        return Err(Error::invalid("p_list/trials", "nothing to sweep"));
    }
    let kernel = config.kernel.build()?;
    let label = config.kernel.label();
    let jobs: Vec<(usize, usize)> = config
        .p_list
        .iter()
        .flat_map(|&p| (0..config.trials).map(move |t| (p, t)))
        .collect();
    let outcomes: Vec<std::result::Result<GapRecord, TrialFailure>> = jobs
        .par_iter()
        .map(|&(p, trial)| {
            let seed = derive_seed(config.seed, "gap_sweep", &[p as u64, trial as u64]);
            let n = ((config.beta * p as f64).round() as usize).max(1);
            let run = || -> Result<(f64, f64)> {
                let cov = config.covariance.build(p, seed)?;
                let x = sample_features(&FeatureModel::gaussian(cov.clone()), n, derive_seed(seed, "features", &[]))?;
                kernel_surrogate_gap(&kernel, &cov, &x)
            };
            match run() {
                Ok((gap_abs, gap_rel)) => Ok(GapRecord {
                    p,
                    n,
                    trial,
                    seed,
                    gap_abs,
                    gap_rel,
                    kernel: label.clone(),
                    beta: config.beta,
                }),
                Err(e) => Err(TrialFailure {
                    p,
                    trial,
                    seed,
                    message: e.to_string(),
                }),
            }
        })
        .collect();
    let mut sweep = GapSweep::default();
    for o in outcomes {
        match o {
            Ok(r) => sweep.records.push(r),
            Err(f) => sweep.failures.push(f),
        }
    }
    Ok(sweep)
}

pub fn write_gap_csv<W: Write>(records: &[GapRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_gap_csv<R: Read>(input: R) -> Result<Vec<GapRecord>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|rec| rec.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{make_linear_kernel, make_ntk_kernel, make_polynomial_kernel, make_rbf_kernel};
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        sample_features(&FeatureModel::gaussian(CovarianceSpec::identity(p).unwrap()), n, seed).unwrap()
    }

    #[test]
    fn linear_kernel_coefficients_exact() {
        for p in [1, 10, 2000] {
            let c = coefficients(&make_linear_kernel(), &CovarianceSpec::identity(p).unwrap()).unwrap();
            assert_eq!((c.tau, c.c0, c.c1, c.c2), (1.0, 0.0, 0.0, 1.0));
            assert_eq!(c.derivative_mode, DerivativeMode::Analytic);
        }
    }

    #[test]
    fn polynomial_coefficients() {
        let p = 2000;
        let c = coefficients(&make_polynomial_kernel(0.1, 2).unwrap(), &CovarianceSpec::identity(p).unwrap()).unwrap();
        assert_eq!(c.tau, 1.0);
        assert_relative_eq!(c.c0, 1.0, max_relative = 1e-12);
        assert_relative_eq!(c.c1, 0.01 + 1.0 / p as f64, max_relative = 1e-12);
        assert_relative_eq!(c.c1, 0.0105, max_relative = 1e-12);
        assert_relative_eq!(c.c2, 0.2, max_relative = 1e-12);
    }

    #[test]
    fn rbf_coefficients() {
        let c = coefficients(&make_rbf_kernel(1.0).unwrap(), &CovarianceSpec::identity(50).unwrap()).unwrap();
        let em1 = (-1.0f64).exp();
        assert_relative_eq!(c.c2, em1, max_relative = 1e-14);
        assert_relative_eq!(c.c0, 1.0 - 2.0 / E, max_relative = 1e-12);
    }

    #[test]
    fn analytic_and_finite_difference_c2_agree() {
        let cov = CovarianceSpec::diagonal(vec![0.5, 1.5, 2.0, 1.0]).unwrap();
        for k in [make_polynomial_kernel(0.1, 2).unwrap(), make_polynomial_kernel(0.3, 3).unwrap(), make_rbf_kernel(2.0).unwrap()] {
            let a = coefficients(&k, &cov).unwrap();
            let tau = a.tau;
            let fd = k.fd_d_dz2(tau, 0.0, tau);
            assert!((a.c2 - fd).abs() <= 1e-4 * a.c2.abs());
        }
        let ntk = coefficients(&make_ntk_kernel(2).unwrap(), &cov).unwrap();
        assert_eq!(ntk.derivative_mode, DerivativeMode::FiniteDifference);
        assert!(ntk.c1 > 0.0 && ntk.c2 > 0.0);
    }

    #[test]
    fn linear_surrogate_equals_gram_exactly() {
        let x = gaussian(70, 15, 1);
        let lin = make_linear_kernel();
        let c = coefficients(&lin, &CovarianceSpec::identity(15).unwrap()).unwrap();
        let m = surrogate_matrix(&c, &x, true).unwrap();
        assert_eq!(&m, gram(&lin, &x).unwrap().matrix());
    }

    #[test]
    fn identity_only_surrogate() {
        let c = SurrogateCoefficients {
            tau: 1.0,
            c0: 1.0,
            c1: 0.0,
            c2: 0.0,
            derivative_mode: DerivativeMode::Analytic,
            source: MomentSource::Specified,
        };
        let m = surrogate_matrix(&c, &gaussian(3, 4, 2), true).unwrap();
        assert_eq!(m, DMatrix::identity(3, 3));
        let m = surrogate_matrix(&c, &gaussian(3, 4, 2), false).unwrap();
        assert_eq!(m, DMatrix::zeros(3, 3));
    }

    #[test]
    fn surrogate_symmetric_and_psd_for_nonnegative_coefficients() {
        let x = gaussian(80, 40, 3);
        let c = coefficients(&make_polynomial_kernel(0.1, 2).unwrap(), &CovarianceSpec::identity(40).unwrap()).unwrap();
        let m = surrogate_matrix(&c, &x, true).unwrap();
        assert_eq!(m, m.transpose());
        let ev = m.symmetric_eigenvalues();
        assert!(ev.min() >= -1e-10 * ev.max());
    }

    #[test]
    fn scaled_covariance_matches_rescaled_data() {
        // g under Σ = s·I with data √s·X is the same kernel matrix as
        // g_s(z) = g(s·z) under Σ = I with data X, and must give the same M.
        let (p, s) = (30, 2.5);
        let x = gaussian(25, p, 4);
        for k in [make_polynomial_kernel(0.1, 2).unwrap(), make_rbf_kernel(3.0).unwrap(), make_ntk_kernel(2).unwrap()] {
            let scaled = coefficients(&k, &CovarianceSpec::scaled_identity(p, s).unwrap()).unwrap();
            assert_relative_eq!(scaled.tau, s, max_relative = 1e-15);
            let m1 = surrogate_matrix(&scaled, &(&x * s.sqrt()), true).unwrap();

            let (k1, k2, k3) = (k.clone(), k.clone(), k.clone());
            let mut ks = KernelDescriptor::new("scaled", move |a, b, c| k1.eval(s * a, s * b, s * c));
            if k.has_analytic_derivatives() {
                ks = ks.with_derivatives(
                    move |a, b, c| s * k2.d_dz2(s * a, s * b, s * c),
                    move |a, b, c| s * s * k3.d2_dz2(s * a, s * b, s * c),
                );
            }
            let unit = coefficients(&ks, &CovarianceSpec::identity(p).unwrap()).unwrap();
            assert_eq!(unit.tau, 1.0);
            let m2 = surrogate_matrix(&unit, &x, true).unwrap();
            assert!((&m1 - &m2).amax() <= 1e-10 * m1.amax(), "{}: {}", k.name(), (&m1 - &m2).amax());
        }
    }

    #[test]
    fn plug_in_estimates_close_to_specified() {
        let x = gaussian(400, 300, 5);
        let k = make_polynomial_kernel(0.1, 2).unwrap();
        let est = estimate_coefficients(&k, &x).unwrap();
        let spec = coefficients(&k, &CovarianceSpec::identity(300).unwrap()).unwrap();
        assert_eq!(est.source, MomentSource::PlugInEstimate);
        assert!((est.tau - 1.0).abs() < 0.02);
        assert!((est.c1 - spec.c1).abs() < 0.1 * spec.c1);
    }

    #[test]
    fn gap_zero_and_known() {
        let a = gaussian(5, 5, 6);
        let a = &a + a.transpose();
        assert_eq!(operator_norm_gap(&a, &a).unwrap().value, 0.0);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -5.0, 1.0]));
        let g = operator_norm_gap(&d, &DMatrix::zeros(3, 3)).unwrap();
        assert_relative_eq!(g.value, 5.0, max_relative = 1e-8);
        assert!(operator_norm_gap(&d, &DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn polynomial_gap_matches_dense_oracle() {
        let (n, p) = (400, 800);
        let x = gaussian(n, p, 7);
        let k = make_polynomial_kernel(0.1, 2).unwrap();
        let c = coefficients(&k, &CovarianceSpec::identity(p).unwrap()).unwrap();
        let km = gram(&k, &x).unwrap().into_matrix();
        let m = surrogate_matrix(&c, &x, true).unwrap();
        let gap = operator_norm_gap(&km, &m).unwrap().value;
        let eig = (&km - &m).symmetric_eigenvalues();
        let dense = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((gap - dense).abs() <= 1e-7 * dense);
        let k_norm = km.symmetric_eigenvalues().max();
        assert!(gap / k_norm < 0.1, "relative gap {}", gap / k_norm);
    }

    #[test]
    fn linear_sweep_has_zero_gap_and_csv_round_trips() {
        let cfg = GapSweepConfig {
            kernel: KernelSpec::Linear,
            covariance: CovarianceFamily::Identity,
            p_list: vec![20, 40],
            beta: 1.0,
            trials: 2,
            seed: 3,
        };
        let sweep = gap_sweep(&cfg).unwrap();
        assert_eq!(sweep.records.len(), 4);
        assert!(sweep.failures.is_empty());
        assert!(sweep.records.iter().all(|r| r.gap_abs <= 1e-10));
        let mut buf = Vec::new();
        write_gap_csv(&sweep.records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("p,n,trial,seed,gap_abs,gap_rel,kernel,beta\n"));
        assert_eq!(read_gap_csv(buf.as_slice()).unwrap(), sweep.records);
        assert_eq!(gap_sweep(&cfg).unwrap(), sweep);
    }

    #[test]
    fn sweep_isolates_failing_trials() {
        let cfg = GapSweepConfig {
            kernel: KernelSpec::Polynomial { c: 0.1, d: 2 },
            covariance: CovarianceFamily::ScaledIdentity { scale: -1.0 },
            p_list: vec![10],
            beta: 1.0,
            trials: 3,
            seed: 1,
        };
        let sweep = gap_sweep(&cfg).unwrap();
        assert!(sweep.records.is_empty());
        assert_eq!(sweep.failures.len(), 3);
    }
}
