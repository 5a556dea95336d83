use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::records::{write_records_csv, ExperimentRecord, FailureRecord, Model, CSV_COLUMNS};
use crate::covariance::CovarianceSpec;
use crate::data_gen::{gp_teacher_outputs, relu_teacher, sample_features, FeatureModel, TeacherSpec};
use crate::error::{Error, Result};
use crate::estimators::{
    equivalent_regularizers, fit_krr, fit_linear_ridge, gp_posterior, linear_risk, normalized_test_error,
    predict_krr, prediction_gap, scaled_linear_system, ModelKind, SpectralSystem,
};
use crate::gram::{cross_gram, gram};
use crate::kernel::KernelDescriptor;
use crate::linalg::add_diagonal;
use crate::linearization::{coefficients, gap_sweep, write_gap_csv, GapRecord, GapSweepConfig, SurrogateCoefficients};
use crate::seeds::{derive_seed, rng_from_seed};
use crate::stats::median;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSeed {
    pub p: usize,
    pub trial: usize,
    pub seed: u64,
}

/// Everything a run produces. Gap sweeps fill `gap_records`, every other
/// experiment fills `records`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub records: Vec<ExperimentRecord>,
    pub gap_records: Vec<GapRecord>,
    pub failures: Vec<FailureRecord>,
    pub seeds: Vec<TrialSeed>,
}

impl RunOutput {
    /// Values of `metric` for `model` at dimension `p`, in record order.
    pub fn values(&self, p: usize, model: Model, metric: &str) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.p == p && r.model == model && r.metric == metric)
            .map(|r| r.value)
            .collect()
    }
}

/// Seed shared by every training size of one `(p, trial)`. It does not depend
/// on the experiment, so runs with the same master seed see the same data.
pub fn trial_seed(config: &ExperimentConfig, p: usize, trial: usize) -> u64 {
    derive_seed(config.master_seed, "trial", &[p as u64, trial as u64])
}

/// Dispatches on `config.experiment`. Configuration problems are returned as
/// errors; failures inside a single trial are collected in the output.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    match config.experiment {
        ExperimentKind::GapSweep => run_gap_sweep(config),
        ExperimentKind::Equivalence => run_equivalence(config),
        ExperimentKind::GdDynamics => run_gd_dynamics(config),
        ExperimentKind::GpOptimality => run_gp_optimality(config),
        ExperimentKind::Counterexample => run_counterexample(config),
    }
}

fn expect_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if config.experiment != kind {
        return Err(Error::Config(format!(
            "config is for `{}`, not `{}`",
            config.experiment.as_str(),
            kind.as_str()
        )));
    }
    config.validate()
}

pub fn run_gap_sweep(config: &ExperimentConfig) -> Result<RunOutput> {
    expect_kind(config, ExperimentKind::GapSweep)?;
    let sweep = gap_sweep(&GapSweepConfig {
        kernel: config.kernel.clone(),
        covariance: config.covariance.clone(),
        p_list: config.p_list.clone(),
        beta: config.beta,
        trials: config.trials,
        seed: config.master_seed,
    })?;
    let mut seeds: Vec<TrialSeed> = sweep
        .records
        .iter()
        .map(|r| TrialSeed { p: r.p, trial: r.trial, seed: r.seed })
        .chain(sweep.failures.iter().map(|f| TrialSeed { p: f.p, trial: f.trial, seed: f.seed }))
        .collect();
    seeds.sort_by_key(|s| (s.p, s.trial));
    Ok(RunOutput {
        failures: sweep
            .failures
            .iter()
            .map(|f| FailureRecord {
                p: f.p,
                n: ((config.beta * f.p as f64).round() as usize).max(1),
                trial: f.trial,
                seed: f.seed,
                message: f.message.clone(),
            })
            .collect(),
        gap_records: sweep.records,
        records: Vec::new(),
        seeds,
    })
}

pub fn run_equivalence(config: &ExperimentConfig) -> Result<RunOutput> {
    expect_kind(config, ExperimentKind::Equivalence)?;
    run_jobs(config, equivalence_trial)
}

pub fn run_gd_dynamics(config: &ExperimentConfig) -> Result<RunOutput> {
    expect_kind(config, ExperimentKind::GdDynamics)?;
    run_jobs(config, gd_dynamics_trial)
}

/// Uses `λ = σ²`; the `lambda` field is ignored.
pub fn run_gp_optimality(config: &ExperimentConfig) -> Result<RunOutput> {
    expect_kind(config, ExperimentKind::GpOptimality)?;
    run_jobs(config, gp_trial)
}

/// The Gaussian-process pipeline on low-rank mixture features.
pub fn run_counterexample(config: &ExperimentConfig) -> Result<RunOutput> {
    expect_kind(config, ExperimentKind::Counterexample)?;
    run_jobs(config, gp_trial)
}

/// Inputs shared by all training sizes of one `(p, trial)`.
struct TrialContext<'a> {
    config: &'a ExperimentConfig,
    kernel: &'a KernelDescriptor,
    p: usize,
    n: usize,
    trial: usize,
    seed: u64,
    cov: CovarianceSpec,
    coeffs: SurrogateCoefficients,
}

impl TrialContext<'_> {
    fn record(&self, model: Model, t: Option<u64>, metric: &str, value: f64) -> Result<ExperimentRecord> {
        if !value.is_finite() {
            return Err(Error::NonFinite("metric value"));
        }
        Ok(ExperimentRecord {
            experiment: self.config.experiment.as_str().to_string(),
            trial: self.trial,
            seed: self.seed,
            p: self.p,
            n: self.n,
            model,
            t,
            metric: metric.to_string(),
            value,
        })
    }

    fn features(&self) -> FeatureModel {
        FeatureModel {
            cov: self.cov.clone(),
            z_dist: self.config.z_dist,
        }
    }

    /// Training rows are a prefix of one fixed stream, so sets are nested in `n`.
    fn inputs(&self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let model = self.features();
        let x_tr = sample_features(&model, self.n, derive_seed(self.seed, "x_tr", &[]))?;
        let x_ts = sample_features(&model, self.config.n_ts, derive_seed(self.seed, "x_ts", &[]))?;
        Ok((x_tr, x_ts))
    }

    fn noise(&self, len: usize, tag: &str) -> DVector<f64> {
        let mut rng = rng_from_seed(derive_seed(self.seed, tag, &[]));
        let sd = self.config.sigma2.sqrt();
        DVector::from_fn(len, |_, _| {
            let e: f64 = StandardNormal.sample(&mut rng);
            sd * e
        })
    }

    /// Inputs and noisy responses for the configured teacher.
    fn data(&self) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>)> {
        let (x_tr, x_ts) = self.inputs()?;
        let (y_tr, y_ts) = match self.config.teacher_or_default() {
            TeacherSpec::ReluNet { widths } => {
                let f = relu_teacher(&widths, self.p, derive_seed(self.seed, "teacher", &[]))?;
                let y_tr = f.eval_rows(&x_tr)? + self.noise(self.n, "noise_tr");
                let y_ts = f.eval_rows(&x_ts)? + self.noise(self.config.n_ts, "noise_ts");
                (y_tr, y_ts)
            }
            TeacherSpec::OracleLinear { w, b } => {
                let w = DVector::from_vec(w);
                let y_tr = (&x_tr * &w).add_scalar(b) + self.noise(self.n, "noise_tr");
                let y_ts = (&x_ts * &w).add_scalar(b) + self.noise(self.config.n_ts, "noise_ts");
                (y_tr, y_ts)
            }
            TeacherSpec::Gp { kernel } => {
                let mut x_all = DMatrix::zeros(self.n + self.config.n_ts, self.p);
                x_all.rows_mut(0, self.n).copy_from(&x_tr);
                x_all.rows_mut(self.n, self.config.n_ts).copy_from(&x_ts);
                gp_teacher_outputs(
                    &kernel.build()?,
                    &x_all,
                    self.n,
                    self.config.sigma2,
                    derive_seed(self.seed, "gp", &[self.n as u64]),
                )?
            }
        };
        Ok((x_tr, y_tr, x_ts, y_ts))
    }
}

fn run_jobs(
    config: &ExperimentConfig,
    trial_fn: fn(&TrialContext) -> Result<Vec<ExperimentRecord>>,
) -> Result<RunOutput> {
    let kernel = config.kernel.build()?;
    if !matches!(config.experiment, ExperimentKind::GpOptimality | ExperimentKind::Counterexample) {
        // the kernel must have a linear equivalent at all
        for &p in &config.p_list {
            let cov = config.covariance.build(p, trial_seed(config, p, 0))?;
            equivalent_regularizers(config.lambda, &coefficients(&kernel, &cov)?, p)?;
        }
    }
    if let Some(TeacherSpec::Gp { kernel }) = &config.teacher {
        kernel.build()?;
    }

    let mut seeds = Vec::new();
    let mut jobs = Vec::new();
    for &p in &config.p_list {
        for trial in 0..config.trials {
            seeds.push(TrialSeed {
                p,
                trial,
                seed: trial_seed(config, p, trial),
            });
        }
        for n in config.n_values(p) {
            for trial in 0..config.trials {
                jobs.push((p, n, trial));
            }
        }
    }
    jobs.sort();
    jobs.dedup();

    let outcomes: Vec<std::result::Result<Vec<ExperimentRecord>, FailureRecord>> = jobs
        .par_iter()
        .map(|&(p, n, trial)| {
            let seed = trial_seed(config, p, trial);
            let run = || -> Result<Vec<ExperimentRecord>> {
                let cov = config.covariance.build(p, seed)?;
                let coeffs = coefficients(&kernel, &cov)?;
                trial_fn(&TrialContext {
                    config,
                    kernel: &kernel,
                    p,
                    n,
                    trial,
                    seed,
                    cov,
                    coeffs,
                })
            };
            run().map_err(|e| {
                log::warn!("trial failed (p = {p}, n = {n}, trial = {trial}): {e}");
                FailureRecord {
                    p,
                    n,
                    trial,
                    seed,
                    message: e.to_string(),
                }
            })
        })
        .collect();

    let mut out = RunOutput {
        seeds,
        ..RunOutput::default()
    };
    for o in outcomes {
        match o {
            Ok(mut r) => out.records.append(&mut r),
            Err(f) => out.failures.push(f),
        }
    }
    Ok(out)
}

fn equivalence_trial(ctx: &TrialContext) -> Result<Vec<ExperimentRecord>> {
    let (x_tr, y_tr, x_ts, y_ts) = ctx.data()?;
    let lambda = ctx.config.lambda;
    let k = gram(ctx.kernel, &x_tr)?;
    let f_krr = predict_krr(&fit_krr(&k, &y_tr, lambda)?, &cross_gram(ctx.kernel, &x_ts, &x_tr)?)?;
    let (l1, l2) = equivalent_regularizers(lambda, &ctx.coeffs, ctx.p)?;
    let f_lin = fit_linear_ridge(&x_tr, &y_tr, l1, l2)?.predict(&x_ts)?;
    let y_sq = y_ts.norm_squared() / y_ts.len() as f64;
    if y_sq == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let noise_floor = ctx.config.sigma2 / y_sq;
    Ok(vec![
        ctx.record(Model::Krr, None, "test_error", normalized_test_error(&y_ts, &f_krr)?)?,
        ctx.record(Model::Linear, None, "test_error", normalized_test_error(&y_ts, &f_lin)?)?,
        ctx.record(Model::Oracle, None, "test_error", noise_floor)?,
        ctx.record(Model::Linear, None, "pred_gap", prediction_gap(&f_krr, &f_lin)?)?,
    ])
}

fn gd_dynamics_trial(ctx: &TrialContext) -> Result<Vec<ExperimentRecord>> {
    let (x_tr, y_tr, x_ts, y_ts) = ctx.data()?;
    let lambda = ctx.config.lambda;
    let k = gram(ctx.kernel, &x_tr)?;
    let kernel_sys = SpectralSystem::new(
        &add_diagonal(k.matrix(), lambda),
        &cross_gram(ctx.kernel, &x_ts, &x_tr)?,
        &y_tr,
    )?;
    let (lin_system, lin_cross) = scaled_linear_system(&x_tr, &x_ts, &ctx.coeffs, lambda)?;
    let linear_sys = SpectralSystem::new(&lin_system, &lin_cross, &y_tr)?;
    // one learning rate for both models, admissible for both
    let eta = ctx
        .config
        .eta
        .unwrap_or_else(|| 1.0 / kernel_sys.max_eigenvalue().max(linear_sys.max_eigenvalue()));
    let steps = ctx.config.step_values();
    let f_k = kernel_sys.trajectory(Some(eta), &steps, ModelKind::Kernel)?;
    let f_l = linear_sys.trajectory(Some(eta), &steps, ModelKind::ScaledLinear)?;
    let mut out = Vec::with_capacity(3 * steps.len());
    for (i, &t) in steps.iter().enumerate() {
        let (a, b) = (&f_k.predictions[i], &f_l.predictions[i]);
        out.push(ctx.record(Model::GdKernelT, Some(t), "test_error", normalized_test_error(&y_ts, a)?)?);
        out.push(ctx.record(Model::GdLinearT, Some(t), "test_error", normalized_test_error(&y_ts, b)?)?);
        if t > 0 {
            out.push(ctx.record(Model::GdLinearT, Some(t), "pred_gap", prediction_gap(a, b)?)?);
        }
    }
    Ok(out)
}

fn gp_trial(ctx: &TrialContext) -> Result<Vec<ExperimentRecord>> {
    let (x_tr, y_tr, x_ts, y_ts) = ctx.data()?;
    let sigma2 = ctx.config.sigma2;
    let post = gp_posterior(ctx.kernel, &x_tr, &y_tr, &x_ts, sigma2)?;
    let (l1, l2) = equivalent_regularizers(sigma2, &ctx.coeffs, ctx.p)?;
    let f_lin = fit_linear_ridge(&x_tr, &y_tr, l1, l2)?.predict(&x_ts)?;
    let e_lin = linear_risk(&post, &f_lin)?;
    let e_opt = &post.variance;
    let y_sq = y_ts.norm_squared() / y_ts.len() as f64;
    if y_sq == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let rel_excess: Vec<f64> = e_lin.iter().zip(e_opt.iter()).map(|(l, o)| (l - o) / o).collect();
    let min_margin = e_lin.iter().zip(e_opt.iter()).map(|(l, o)| l - o).fold(f64::INFINITY, f64::min);
    Ok(vec![
        ctx.record(Model::GpOpt, None, "test_error", normalized_test_error(&y_ts, &post.mean)?)?,
        ctx.record(Model::Linear, None, "test_error", normalized_test_error(&y_ts, &f_lin)?)?,
        ctx.record(Model::GpOpt, None, "optimal_risk", e_opt.mean() / y_sq)?,
        ctx.record(Model::Linear, None, "expected_risk", e_lin.mean() / y_sq)?,
        ctx.record(Model::Linear, None, "excess_risk", median(&rel_excess).unwrap_or(0.0))?,
        ctx.record(Model::Linear, None, "min_risk_margin", min_margin)?,
        ctx.record(Model::Linear, None, "pred_gap", prediction_gap(&post.mean, &f_lin)?)?,
    ])
}

/// Written next to the CSV as `<name>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub library_version: String,
    pub config: ExperimentConfig,
    pub columns: Vec<String>,
    pub record_count: usize,
    pub seeds: Vec<TrialSeed>,
    pub failure_count: usize,
    pub failures: Vec<FailureRecord>,
}

pub fn sidecar(config: &ExperimentConfig, output: &RunOutput) -> Sidecar {
    let columns: Vec<String> = if config.experiment == ExperimentKind::GapSweep {
        ["p", "n", "trial", "seed", "gap_abs", "gap_rel", "kernel", "beta"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    } else {
        CSV_COLUMNS.iter().map(|s| s.to_string()).collect()
    };
    Sidecar {
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        columns,
        record_count: output.records.len() + output.gap_records.len(),
        seeds: output.seeds.clone(),
        failure_count: output.failures.len(),
        failures: output.failures.clone(),
    }
}

/// The CSV body for a run.
pub fn csv_bytes(config: &ExperimentConfig, output: &RunOutput) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    if config.experiment == ExperimentKind::GapSweep {
        write_gap_csv(&output.gap_records, &mut buf)?;
    } else {
        write_records_csv(&output.records, &mut buf)?;
    }
    Ok(buf)
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes the CSV to `csv_path` and the sidecar next to it; returns the sidecar path.
pub fn write_outputs(config: &ExperimentConfig, output: &RunOutput, csv_path: &Path) -> Result<PathBuf> {
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(csv_path, csv_bytes(config, output)?)?;
    let side = sidecar_path(csv_path);
    fs::write(&side, serde_json::to_string_pretty(&sidecar(config, output))?)?;
    Ok(side)
}
