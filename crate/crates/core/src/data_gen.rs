//! Seeded synthetic data: proportional features, ReLU-network teachers,
//! Gaussian-process teachers and the low-rank mixture design.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceSpec;
use crate::error::{Error, Result};
use crate::gram::gram;
use crate::kernel::{KernelDescriptor, KernelSpec};
use crate::linalg::{add_diagonal, sym_eigen};
use crate::seeds::{derive_seed, rng_from_seed, Rng};

/// Law of the i.i.d. entries of `z` (mean 0, variance 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZDistribution {
    #[default]
    Gaussian,
    Rademacher,
    /// Uniform on `[−√3, √3]`.
    UniformScaled,
}

impl ZDistribution {
    #[inline]
    fn sample(self, rng: &mut Rng) -> f64 {
        match self {
            ZDistribution::Gaussian => StandardNormal.sample(rng),
            ZDistribution::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            ZDistribution::UniformScaled => {
                let s = 3f64.sqrt();
                rng.random_range(-s..s)
            }
        }
    }
}

/// `x = Σ^{1/2} z` with i.i.d. standardized `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureModel {
    pub cov: CovarianceSpec,
    pub z_dist: ZDistribution,
}

impl FeatureModel {
    pub fn gaussian(cov: CovarianceSpec) -> Self {
        Self {
            cov,
            z_dist: ZDistribution::Gaussian,
        }
    }

    pub fn p(&self) -> usize {
        self.cov.p()
    }
}

/// `n` i.i.d. rows drawn from `model`; a pure function of `(model, n, seed)`.
///
/// For a low-rank mixture each row first picks a component uniformly and then
/// draws `x = S_c·g` with `g` an `r`-vector of standardized entries.
pub fn sample_features(model: &FeatureModel, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one sample"));
    }
    let p = model.p();
    let mut rng = rng_from_seed(seed);
    let dist = model.z_dist;
    if let Some(factors) = model.cov.mixture_factors() {
        let r = factors[0].ncols();
        let mut x = DMatrix::zeros(n, p);
        for i in 0..n {
            let c = rng.random_range(0..factors.len());
            let g = DVector::from_fn(r, |_, _| dist.sample(&mut rng));
            let row = factors[c].as_ref() * g;
            x.row_mut(i).copy_from(&row.transpose());
        }
        return Ok(x);
    }
    // Fill row by row so that a prefix of rows does not depend on n.
    let mut z = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            z[(i, j)] = dist.sample(&mut rng);
        }
    }
    if let Some(d) = model.cov.diagonal_values() {
        for (j, v) in d.iter().enumerate() {
            let s = v.sqrt();
            z.column_mut(j).scale_mut(s);
        }
        Ok(z)
    } else if let Some(root) = model.cov.dense_sqrt() {
        // rows are zᵢᵀ, so X = Z·Σ^{1/2} (the root is symmetric)
        Ok(z * root)
    } else {
        Ok(z)
    }
}

/// `k` factors `S_c ∈ ℝ^{p×r}` with i.i.d. `N(0, 1/√p)` entries (variance `1/√p`).
pub fn mixture_covariance(p: usize, r: usize, k: usize, seed: u64) -> Result<CovarianceSpec> {
    if r == 0 || r > p {
        return Err(Error::invalid("r", format!("need 1 <= r <= p, got r={r}, p={p}")));
    }
    if k == 0 {
        return Err(Error::invalid("k", "need at least one component"));
    }
    let std = (p as f64).powf(-0.25);
    let factors = (0..k as u64)
        .map(|c| {
            let mut rng = rng_from_seed(derive_seed(seed, "mixture_factor", &[c]));
            DMatrix::from_fn(p, r, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                std * z
            })
        })
        .collect();
    CovarianceSpec::low_rank_mixture(factors)
}

/// Covariance recipe parameterized by dimension, as used in sweeps and configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceFamily {
    #[default]
    Identity,
    ScaledIdentity { scale: f64 },
    /// Geometric spectrum `σⱼ² ∝ ratio^{j/(p−1)}` normalized to `tr(Σ)/p = 1`.
    Geometric { ratio: f64 },
    LowRankMixture { rank: usize, components: usize },
}

impl CovarianceFamily {
    pub fn build(&self, p: usize, seed: u64) -> Result<CovarianceSpec> {
        match *self {
            CovarianceFamily::Identity => CovarianceSpec::identity(p),
            CovarianceFamily::ScaledIdentity { scale } => CovarianceSpec::scaled_identity(p, scale),
            CovarianceFamily::Geometric { ratio } => {
                if !(ratio > 0.0) {
                    return Err(Error::invalid("ratio", "must be positive"));
                }
                let denom = (p.max(2) - 1) as f64;
                let raw: Vec<f64> = (0..p).map(|j| ratio.powf(j as f64 / denom)).collect();
                let mean = raw.iter().sum::<f64>() / p as f64;
                CovarianceSpec::diagonal(raw.into_iter().map(|v| v / mean).collect())
            }
            CovarianceFamily::LowRankMixture { rank, components } => {
                mixture_covariance(p, rank, components, derive_seed(seed, "mixture", &[p as u64]))
            }
        }
    }
}

/// Bias-free ReLU network with `√(2/fan_in)` scaling on every layer and
/// standard normal weights fixed by a seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluTeacher {
    layers: Vec<DMatrix<f64>>,
    output: DVector<f64>,
}

/// A teacher with the given hidden widths on `p` inputs.
pub fn relu_teacher(widths: &[usize], p: usize, seed: u64) -> Result<ReluTeacher> {
    if widths.is_empty() || widths.contains(&0) {
        return Err(Error::invalid("widths", "need at least one nonzero hidden width"));
    }
    if p == 0 {
        return Err(Error::invalid("p", "input dimension must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let mut fan_in = p;
    let mut layers = Vec::with_capacity(widths.len());
    for &w in widths {
        layers.push(DMatrix::from_fn(w, fan_in, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z
        }));
        fan_in = w;
    }
    let output = DVector::from_fn(fan_in, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    });
    Ok(ReluTeacher { layers, output })
}

impl ReluTeacher {
    pub fn input_dim(&self) -> usize {
        self.layers[0].ncols()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let m = DMatrix::from_row_slice(1, x.len(), x);
        Ok(self.eval_rows(&m)?[0])
    }

    /// Outputs for every row of `x`.
    pub fn eval_rows(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "relu teacher input",
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        // activations as columns: a = relu(√(2/fan_in)·W a_prev)
        let mut a = x.transpose();
        for w in &self.layers {
            let scale = (2.0 / w.ncols() as f64).sqrt();
            a = (w * a * scale).map(|v| v.max(0.0));
        }
        let scale = (2.0 / self.output.len() as f64).sqrt();
        Ok(a.tr_mul(&self.output) * scale)
    }
}

/// First jitter relative to the mean diagonal, the factor per retry, and the cap.
pub const JITTER_START: f64 = 1e-10;
pub const JITTER_GROWTH: f64 = 10.0;
pub const JITTER_MAX: f64 = 1e-4;

/// Lower Cholesky factor of `K + jitter·I`, escalating the jitter on failure.
pub fn cholesky_with_jitter(k: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let n = k.nrows();
    let mean_diag = k.diagonal().sum() / n as f64;
    let base = if mean_diag > 0.0 { mean_diag } else { 1.0 };
    let mut rel = JITTER_START;
    loop {
        let jitter = rel * base;
        if let Some(ch) = nalgebra::Cholesky::new(add_diagonal(k, jitter)) {
            return Ok((ch.unpack(), jitter));
        }
        rel *= JITTER_GROWTH;
        if rel > JITTER_MAX * (1.0 + 1e-9) {
            let (vals, _) = sym_eigen(k)?;
            let max = vals[vals.len() - 1];
            let min = vals[0];
            return Err(Error::JitterExhausted {
                max_jitter: JITTER_MAX * base,
                condition: if min > 0.0 { max / min } else { f64::INFINITY },
            });
        }
    }
}

/// Joint draw over train and test rows of `f ~ GP(0, K)`, plus `N(0, σ²)` noise.
///
/// The first `n_tr` rows of `x_all` are training points.
pub fn gp_teacher_outputs(
    kernel: &KernelDescriptor,
    x_all: &DMatrix<f64>,
    n_tr: usize,
    sigma2: f64,
    seed: u64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if !(sigma2 >= 0.0) {
        return Err(Error::invalid("sigma2", "noise variance must be >= 0"));
    }
    if n_tr > x_all.nrows() {
        return Err(Error::invalid("n_tr", "more training rows than points"));
    }
    let k = gram(kernel, x_all)?;
    let (chol, _) = cholesky_with_jitter(k.matrix())?;
    let n = x_all.nrows();
    let mut rng = rng_from_seed(seed);
    let xi = DVector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    });
    let mut y = chol * xi;
    let sd = sigma2.sqrt();
    for v in y.iter_mut() {
        let e: f64 = StandardNormal.sample(&mut rng);
        *v += sd * e;
    }
    let y_tr = y.rows(0, n_tr).into_owned();
    let y_ts = y.rows(n_tr, n - n_tr).into_owned();
    Ok((y_tr, y_ts))
}

/// Config form of a teacher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TeacherSpec {
    ReluNet { widths: Vec<usize> },
    Gp { kernel: KernelSpec },
    OracleLinear { w: Vec<f64>, b: f64 },
}

/// Train/test split with the generating description attached.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x_tr: DMatrix<f64>,
    pub y_tr: DVector<f64>,
    pub x_ts: DMatrix<f64>,
    pub y_ts: DVector<f64>,
    pub description: serde_json::Value,
}

fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::Io(format!("{}: {e}", path.display()))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(Error::Io(format!("{}: ragged rows", path.display())));
    }
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

impl Dataset {
    /// One CSV per matrix (`x_tr.csv`, `y_tr.csv`, `x_ts.csv`, `y_ts.csv`) and a
    /// `dataset.json` sidecar with shapes and the description.
    pub fn dump(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_matrix_csv(&dir.join("x_tr.csv"), &self.x_tr)?;
        write_matrix_csv(&dir.join("y_tr.csv"), &DMatrix::from_column_slice(self.y_tr.len(), 1, self.y_tr.as_slice()))?;
        write_matrix_csv(&dir.join("x_ts.csv"), &self.x_ts)?;
        write_matrix_csv(&dir.join("y_ts.csv"), &DMatrix::from_column_slice(self.y_ts.len(), 1, self.y_ts.as_slice()))?;
        let sidecar = serde_json::json!({
            "shapes": {
                "x_tr": [self.x_tr.nrows(), self.x_tr.ncols()],
                "y_tr": [self.y_tr.len()],
                "x_ts": [self.x_ts.nrows(), self.x_ts.ncols()],
                "y_ts": [self.y_ts.len()],
            },
            "description": self.description,
        });
        fs::write(dir.join("dataset.json"), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let sidecar: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("dataset.json"))?)?;
        let col = |m: DMatrix<f64>| DVector::from_column_slice(m.as_slice());
        Ok(Self {
            x_tr: read_matrix_csv(&dir.join("x_tr.csv"))?,
            y_tr: col(read_matrix_csv(&dir.join("y_tr.csv"))?),
            x_ts: read_matrix_csv(&dir.join("x_ts.csv"))?,
            y_ts: col(read_matrix_csv(&dir.join("y_ts.csv"))?),
            description: sidecar["description"].clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::make_polynomial_kernel;
    use approx::assert_relative_eq;

    #[test]
    fn identity_features_have_unit_covariance() {
        let n = 100_000;
        let model = FeatureModel::gaussian(CovarianceSpec::identity(10).unwrap());
        let x = sample_features(&model, n, 1).unwrap();
        let cov = x.tr_mul(&x) / n as f64;
        let tol = 3.0 * 2f64.sqrt() / (n as f64).sqrt();
        for i in 0..10 {
            for j in 0..10 {
                let want = if i == j { 1.0 } else { 0.0 };
                // diagonal entries have variance 2/n, off-diagonal 1/n
                assert!((cov[(i, j)] - want).abs() <= tol, "({i},{j}) = {}", cov[(i, j)]);
            }
        }
    }

    #[test]
    fn diagonal_scales_columns_and_standardized_laws() {
        let n = 100_000;
        for dist in [ZDistribution::Gaussian, ZDistribution::Rademacher, ZDistribution::UniformScaled] {
            let model = FeatureModel {
                cov: CovarianceSpec::diagonal(vec![4.0, 1.0, 1.0]).unwrap(),
                z_dist: dist,
            };
            let x = sample_features(&model, n, 2).unwrap();
            for (j, want) in [4.0f64, 1.0, 1.0].into_iter().enumerate() {
                let col = x.column(j);
                let mean = col.mean();
                let var = col.iter().map(|v| v * v).sum::<f64>() / n as f64;
                assert!(mean.abs() <= 3.0 * want.sqrt() / (n as f64).sqrt(), "{dist:?} mean {mean}");
                // var of z² is at most 2 for these laws
                assert!((var - want).abs() <= 3.0 * want * 2f64.sqrt() / (n as f64).sqrt(), "{dist:?} var {var}");
            }
        }
    }

    #[test]
    fn dense_covariance_is_reproduced() {
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 0.8, 0.8, 1.0]);
        let model = FeatureModel::gaussian(CovarianceSpec::dense(sigma.clone()).unwrap());
        let n = 100_000;
        let x = sample_features(&model, n, 3).unwrap();
        let cov = x.tr_mul(&x) / n as f64;
        assert!((cov - sigma).amax() < 0.03);
    }

    #[test]
    fn sampling_is_deterministic() {
        let model = FeatureModel::gaussian(CovarianceSpec::identity(7).unwrap());
        assert_eq!(sample_features(&model, 30, 5).unwrap(), sample_features(&model, 30, 5).unwrap());
        assert_ne!(sample_features(&model, 30, 5).unwrap(), sample_features(&model, 30, 6).unwrap());
        let mix = FeatureModel::gaussian(mixture_covariance(20, 4, 2, 1).unwrap());
        assert_eq!(sample_features(&mix, 10, 5).unwrap(), sample_features(&mix, 10, 5).unwrap());
    }

    #[test]
    fn mixture_rank_and_covariance() {
        let (p, r) = (60, 5);
        let cov = mixture_covariance(p, r, 2, 11).unwrap();
        let (vals, _) = sym_eigen(&cov.materialize()).unwrap();
        let max = vals[p - 1];
        assert!(vals.iter().rev().skip(2 * r).all(|v| v.abs() < 1e-10 * max));
        assert!(vals[p - 2 * r] > 1e-6 * max);

        let n = 100_000;
        let x = sample_features(&FeatureModel::gaussian(cov.clone()), n, 12).unwrap();
        let emp = x.tr_mul(&x) / n as f64;
        let gap = crate::linalg::exact_sym_operator_norm(&(emp - cov.materialize())).unwrap();
        // Monte-Carlo error of a rank-2r covariance estimate scales like ‖Σ‖·√(2r/n)
        assert!(gap <= 3.0 * max * ((2 * r) as f64 / n as f64).sqrt(), "gap {gap} max {max}");
    }

    #[test]
    fn relu_teacher_properties() {
        let t = relu_teacher(&[100, 100], 30, 4).unwrap();
        assert_eq!(t.eval(&[0.0; 30]).unwrap(), 0.0);
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        assert_relative_eq!(t.eval(&x2).unwrap(), 2.0 * t.eval(&x).unwrap(), max_relative = 1e-12);
        assert_eq!(t, relu_teacher(&[100, 100], 30, 4).unwrap());
        assert!(relu_teacher(&[], 30, 4).is_err());

        // output variance over random inputs and seeds is O(1) for x ~ N(0, I)
        let model = FeatureModel::gaussian(CovarianceSpec::identity(30).unwrap());
        let mut vals = Vec::new();
        for s in 0..20 {
            let t = relu_teacher(&[100, 100], 30, 100 + s).unwrap();
            let x = sample_features(&model, 50, 200 + s).unwrap();
            vals.extend(t.eval_rows(&x).unwrap().iter().copied());
        }
        let m2 = vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64;
        assert!(m2 > 0.1 && m2 < 10.0, "second moment {m2}");
    }

    #[test]
    fn gp_teacher_single_point_variance() {
        let k = make_polynomial_kernel(0.1, 2).unwrap();
        let x = DMatrix::from_row_slice(1, 4, &[1.0, -0.5, 0.3, 0.9]);
        let kxx = crate::gram::diagonal(&k, &x).unwrap()[0];
        let draws: Vec<f64> = (0..10_000)
            .map(|s| gp_teacher_outputs(&k, &x, 1, 0.0, s).unwrap().0[0])
            .collect();
        let var = draws.iter().map(|v| v * v).sum::<f64>() / draws.len() as f64;
        // sd of the variance estimate is kxx·√(2/N)
        assert!((var - kxx).abs() <= 3.0 * kxx * (2.0 / 1e4f64).sqrt(), "{var} vs {kxx}");
    }

    #[test]
    fn gp_teacher_duplicate_points_agree() {
        let k = make_polynomial_kernel(0.1, 2).unwrap();
        let x = DMatrix::from_row_slice(2, 3, &[0.5, 1.0, -1.0, 0.5, 1.0, -1.0]);
        let (y, _) = gp_teacher_outputs(&k, &x, 2, 0.0, 3).unwrap();
        assert!((y[0] - y[1]).abs() < 1e-3);
    }

    #[test]
    fn gp_teacher_joint_covariance() {
        let k = make_polynomial_kernel(0.1, 2).unwrap();
        let x = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, -0.4, 0.3, -1.1, 0.5, -0.7, 0.4, 0.9]);
        let kk = gram(&k, &x).unwrap().into_matrix();
        let sigma2 = 0.1;
        let n = 10_000;
        let mut emp = DMatrix::zeros(3, 3);
        for s in 0..n {
            let (y, _) = gp_teacher_outputs(&k, &x, 3, sigma2, s).unwrap();
            emp += &y * y.transpose();
        }
        emp /= n as f64;
        let target = add_diagonal(&kk, sigma2);
        for i in 0..3 {
            for j in 0..3 {
                let sd = ((target[(i, i)] * target[(j, j)] + target[(i, j)].powi(2)) / n as f64).sqrt();
                assert!((emp[(i, j)] - target[(i, j)]).abs() <= 3.0 * sd, "({i},{j})");
            }
        }
        // linear functional aᵀy has variance aᵀ(K+σ²I)a
        let a = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let va = (a.transpose() * &target * &a)[0];
        let ve = (a.transpose() * &emp * &a)[0];
        assert!((ve - va).abs() <= 3.0 * va * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn dataset_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = Dataset {
            x_tr: DMatrix::from_row_slice(2, 2, &[1.0, 0.1, -3.5, 1e-17]),
            y_tr: DVector::from_vec(vec![0.25, -1.0 / 3.0]),
            x_ts: DMatrix::from_row_slice(1, 2, &[2.0, 4.0]),
            y_ts: DVector::from_vec(vec![7.0]),
            description: serde_json::json!({"seed": 3}),
        };
        ds.dump(dir.path()).unwrap();
        assert_eq!(Dataset::load(dir.path()).unwrap(), ds);
    }
}
