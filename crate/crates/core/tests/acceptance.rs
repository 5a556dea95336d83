//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::Instant;

use kernel_equiv::experiments::{csv_bytes, default_preset, preset, run_experiment, ExperimentKind, Model, PRESETS};
use kernel_equiv::seeds::rng_from_seed;
use kernel_equiv::stats::median;
use kernel_equiv::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = std::result::Result<String, String>;

fn randn(n: usize, m: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| StandardNormal.sample(rng))
}

fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / a.norm().max(f64::MIN_POSITIVE)
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// `(A + UUᵀ)⁻¹U = A⁻¹U(I + UᵀA⁻¹U)⁻¹` and
/// `(αI − AᵀA)^t Aᵀ = Aᵀ(αI − AAᵀ)^t`.
fn criterion_1() -> Outcome {
    let mut rng = rng_from_seed(101);
    let mut worst_w: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=40);
        let d = rng.random_range(1..=40);
        let b = randn(n, n, &mut rng);
        let a = &b * b.transpose() / n as f64 + DMatrix::identity(n, n);
        let u = randn(n, d, &mut rng) / (n as f64).sqrt();
        let lhs = (&a + &u * u.transpose()).try_inverse().ok_or("singular")? * &u;
        let a_inv_u = a.clone().try_inverse().ok_or("singular")? * &u;
        let inner = (DMatrix::identity(d, d) + u.transpose() * &a_inv_u).try_inverse().ok_or("singular")?;
        worst_w = worst_w.max(rel_err(&lhs, &(a_inv_u * inner)));
    }
    let mut worst_p: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=40);
        let p = rng.random_range(1..=40);
        let a = randn(n, p, &mut rng) / ((n + p) as f64).sqrt();
        let alpha = rng.random_range(2.5..4.0);
        let t = rng.random_range(0..=5);
        let left = (DMatrix::identity(p, p) * alpha - a.transpose() * &a).pow(t) * a.transpose();
        let right = a.transpose() * (DMatrix::identity(n, n) * alpha - &a * a.transpose()).pow(t);
        worst_p = worst_p.max(rel_err(&left, &right));
    }
    check(
        worst_w <= 1e-9 && worst_p <= 1e-10,
        format!("Woodbury max rel err {worst_w:.2e} (tol 1e-9), push-through {worst_p:.2e} (tol 1e-10)"),
    )
}

/// Both gradient-descent trajectories reach their ridge solutions.
fn criterion_2() -> Outcome {
    let kernel = make_polynomial_kernel(0.1, 2).map_err(|e| e.to_string())?;
    let (p, n, lambda) = (200, 100, 0.1);
    let mut worst: f64 = 0.0;
    for seed in 0..3u64 {
        let run = || -> Result<f64> {
            let cov = CovarianceSpec::identity(p)?;
            let model = FeatureModel::gaussian(cov.clone());
            let x = sample_features(&model, n, 1000 + seed)?;
            let xt = sample_features(&model, 50, 2000 + seed)?;
            let y = DVector::from_fn(n, |i, _| x[(i, 0)] + 0.5 * x[(i, 1)] * x[(i, 2)] + 0.1);
            let k = gram(&kernel, &x)?;
            let cross = cross_gram(&kernel, &xt, &x)?;
            let steps = [10_000_000];
            let f_k = gd_kernel_trajectory(&k, &cross, &y, lambda, None, &steps)?;
            let f_krr = predict_krr(&fit_krr(&k, &y, lambda)?, &cross)?;
            let coeffs = coefficients(&kernel, &cov)?;
            let f_l = gd_linear_trajectory(&x, &xt, &y, &coeffs, lambda, None, &steps)?;
            let (l1, l2) = equivalent_regularizers(lambda, &coeffs, p)?;
            let f_lin = fit_linear_ridge(&x, &y, l1, l2)?.predict(&xt)?;
            let e1 = (&f_k.predictions[0] - &f_krr).norm() / f_krr.norm();
            let e2 = (&f_l.predictions[0] - &f_lin).norm() / f_lin.norm();
            Ok(e1.max(e2))
        };
        worst = worst.max(run().map_err(|e| e.to_string())?);
    }
    check(worst <= 1e-8, format!("max rel diff to closed form {worst:.2e} (tol 1e-8)"))
}

/// Median relative operator-norm gap shrinks with p.
fn criterion_3() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for kernel in [KernelSpec::Polynomial { c: 0.1, d: 2 }, KernelSpec::Ntk { depth: 3 }] {
        let sweep = gap_sweep(&GapSweepConfig {
            kernel: kernel.clone(),
            covariance: CovarianceFamily::Identity,
            p_list: vec![200, 400, 800],
            beta: 1.0,
            trials: 5,
            seed: 7,
        })
        .map_err(|e| e.to_string())?;
        let m: Vec<f64> = [200, 400, 800]
            .iter()
            .map(|&p| sweep.median_relative_gap(p).unwrap_or(f64::NAN))
            .collect();
        ok &= sweep.failures.is_empty() && strictly_decreasing(&m) && m[2] <= m[0] / 1.5;
        details.push(format!("{}: {:.4} {:.4} {:.4}", kernel.label(), m[0], m[1], m[2]));
    }
    check(ok, format!("median rel gap at p = 200, 400, 800: {}", details.join("; ")))
}

fn equivalence_setting(kind: ExperimentKind) -> kernel_equiv::experiments::ExperimentConfig {
    let mut c = default_preset(kind);
    c.p_list = vec![250, 1000];
    c.n_ratios = vec![0.5];
    c.n_ts = 200;
    c.trials = 5;
    c
}

/// Pilot runs with 20 trials put the p = 1000 median at 0.046 to 0.070
/// across master seeds 1 to 3 for Gaussian features.
const THEOREM1_GAP_MAX: f64 = 0.08;

/// Kernel ridge and linear predictions agree more closely as p grows.
fn criterion_4() -> Outcome {
    let mut c = equivalence_setting(ExperimentKind::Equivalence);
    c.trials = 20;
    let out = run_experiment(&c).map_err(|e| e.to_string())?;
    let g250 = median(&out.values(250, Model::Linear, "pred_gap")).unwrap_or(f64::NAN);
    let g1000 = median(&out.values(1000, Model::Linear, "pred_gap")).unwrap_or(f64::NAN);
    check(
        out.failures.is_empty() && g1000 <= THEOREM1_GAP_MAX && g1000 < g250,
        format!("median pred gap p=250 {g250:.4}, p=1000 {g1000:.4} (tol {THEOREM1_GAP_MAX})"),
    )
}

/// Test-error gap between the two gradient-descent paths shrinks with p.
fn criterion_5() -> Outcome {
    let mut c = equivalence_setting(ExperimentKind::GdDynamics);
    c.steps = vec![1, 5, 25, 125];
    let out = run_experiment(&c).map_err(|e| e.to_string())?;
    let mut err_gap = Vec::new();
    let mut pred_gap = Vec::new();
    for p in [250, 1000] {
        let per_trial: Vec<f64> = (0..c.trials)
            .map(|trial| {
                c.steps
                    .iter()
                    .map(|&t| {
                        let pick = |m: Model| {
                            out.records
                                .iter()
                                .find(|r| r.p == p && r.trial == trial && r.t == Some(t) && r.model == m && r.metric == "test_error")
                                .map_or(f64::NAN, |r| r.value)
                        };
                        (pick(Model::GdKernelT) - pick(Model::GdLinearT)).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        err_gap.push(median(&per_trial).unwrap_or(f64::NAN));
        pred_gap.push(
            out.values(p, Model::GdLinearT, "pred_gap")
                .into_iter()
                .fold(0.0, f64::max),
        );
    }
    check(
        out.failures.is_empty() && err_gap[1] < err_gap[0],
        format!(
            "median max_t |E_kernel - E_linear| p=250 {:.2e}, p=1000 {:.2e} (info: max pred gap {:.3}, {:.3})",
            err_gap[0], err_gap[1], pred_gap[0], pred_gap[1]
        ),
    )
}

/// The linear model is never better than the Bayes-optimal posterior and its
/// excess risk is small and shrinking.
fn criterion_6() -> Outcome {
    let mut c = default_preset(ExperimentKind::GpOptimality);
    c.p_list = vec![250, 500];
    c.n_ratios = vec![0.5, 1.0, 2.0];
    c.trials = 5;
    let out = run_experiment(&c).map_err(|e| e.to_string())?;
    let margins: Vec<f64> = [250, 500]
        .iter()
        .flat_map(|&p| out.values(p, Model::Linear, "min_risk_margin"))
        .collect();
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let e250 = median(&out.values(250, Model::Linear, "excess_risk")).unwrap_or(f64::NAN);
    let e500 = median(&out.values(500, Model::Linear, "excess_risk")).unwrap_or(f64::NAN);
    check(
        out.failures.is_empty() && margins.len() == 30 && min_margin >= 0.0 && e500 <= 0.05 && e500 < e250,
        format!("min(E_lin - E_opt) {min_margin:.2e}; median excess p=250 {e250:.4}, p=500 {e500:.4} (tol 0.05)"),
    )
}

/// Off the proportional regime the kernel posterior clearly beats the linear model.
fn criterion_7() -> Outcome {
    let mut c = default_preset(ExperimentKind::Counterexample);
    c.p_list = vec![500];
    c.n_ratios = vec![1.0];
    c.trials = 5;
    let out = run_experiment(&c).map_err(|e| e.to_string())?;
    let ker = out.values(500, Model::GpOpt, "test_error");
    let lin = out.values(500, Model::Linear, "test_error");
    let rel: Vec<f64> = ker.iter().zip(&lin).map(|(k, l)| (l - k) / l).collect();
    let wins = rel.iter().filter(|r| **r >= 0.10).count();
    check(
        wins >= 4,
        format!("kernel better by >= 10% in {wins}/5 seeds; relative margins {rel:.3?}"),
    )
}

/// Finite-width NTK against the one-hidden-layer recursion, and exact arc-cosine values.
fn criterion_8() -> Outcome {
    use std::f64::consts::PI;
    let exact = [
        (kappa0(-1.0), 0.0),
        (kappa0(0.0), 0.5),
        (kappa0(1.0), 1.0),
        (kappa1(-1.0), 0.0),
        (kappa1(0.0), 1.0 / PI),
        (kappa1(1.0), 1.0),
    ];
    let kappa_err = exact.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut rng = rng_from_seed(808);
    let p = 10;
    let mut errs = Vec::new();
    for pair in 0..10u64 {
        let u: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let v: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let emp = empirical_ntk(50_000, &u, &v, 10, 9000 + pair).map_err(|e| e.to_string())?;
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let want = ntk_recursion(dot(&u, &u), dot(&u, &v), dot(&v, &v), 1);
        errs.push(((emp - want) / want).abs());
    }
    let med = median(&errs).unwrap_or(f64::NAN);
    check(
        kappa_err <= 1e-12 && med <= 0.02,
        format!("kappa max err {kappa_err:.1e} (tol 1e-12); empirical NTK median rel err {med:.4} (tol 0.02)"),
    )
}

/// Every preset, at reduced size, yields identical CSV bodies on reruns.
fn criterion_9() -> Outcome {
    let mut mismatched = Vec::new();
    for (name, _) in PRESETS {
        let mut c = preset(name).map_err(|e| e.to_string())?;
        c.p_list = vec![60];
        c.trials = 2;
        if let CovarianceFamily::LowRankMixture { components, .. } = c.covariance {
            c.covariance = CovarianceFamily::LowRankMixture { rank: 15, components };
        }
        let a = run_experiment(&c).and_then(|o| csv_bytes(&c, &o)).map_err(|e| format!("{name}: {e}"))?;
        let b = run_experiment(&c).and_then(|o| csv_bytes(&c, &o)).map_err(|e| format!("{name}: {e}"))?;
        if a != b || a.is_empty() {
            mismatched.push(*name);
        }
    }
    check(
        mismatched.is_empty(),
        format!("{} presets rerun at p = 60, mismatches: {mismatched:?}", PRESETS.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("algebraic identities", criterion_1),
        ("closed-form consistency", criterion_2),
        ("surrogate gap trend", criterion_3),
        ("ridge equivalence", criterion_4),
        ("gradient-descent equivalence", criterion_5),
        ("GP optimality", criterion_6),
        ("mixture counterexample", criterion_7),
        ("NTK recursion oracle", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {} {name}: PASS ({secs:.1}s) {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({secs:.1}s) {d}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
