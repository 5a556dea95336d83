//! Kernel ridge regression against the linear model with its two equivalent
//! regularizers, on data from a random ReLU teacher.
//!
//! cargo run --release --example ridge_equivalence

use kernel_equiv::*;

fn main() -> Result<()> {
    let (p, n, n_ts, lambda, sigma2) = (600, 300, 200, 0.005, 0.1);
    let cov = CovarianceSpec::identity(p)?;
    let model = FeatureModel::gaussian(cov.clone());
    let x = sample_features(&model, n, 1)?;
    let xt = sample_features(&model, n_ts, 2)?;
    let teacher = relu_teacher(&[100, 100], p, 3)?;
    let noise = sample_features(&FeatureModel::gaussian(CovarianceSpec::scaled_identity(1, sigma2)?), n + n_ts, 4)?;
    let y = teacher.eval_rows(&x)? + noise.rows(0, n).column(0);
    let yt = teacher.eval_rows(&xt)? + noise.rows(n, n_ts).column(0);

    let kernel = make_ntk_kernel(3)?;
    let f_krr = KernelRidge::fit(&kernel, &x, &y, lambda)?.predict(&xt)?;

    let coeffs = coefficients(&kernel, &cov)?;
    let (lambda1, lambda2) = equivalent_regularizers(lambda, &coeffs, p)?;
    let f_lin = fit_linear_ridge(&x, &y, lambda1, lambda2)?.predict(&xt)?;

    println!("lambda1 = {lambda1:.4}, lambda2 = {lambda2:.2}");
    println!("kernel ridge test error {:.4}", normalized_test_error(&yt, &f_krr)?);
    println!("linear model test error {:.4}", normalized_test_error(&yt, &f_lin)?);
    println!("prediction gap          {:.4}", prediction_gap(&f_krr, &f_lin)?);
    Ok(())
}
