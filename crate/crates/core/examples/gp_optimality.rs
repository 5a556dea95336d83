//! Under a Gaussian-process teacher the equivalent linear model nearly attains
//! the Bayes risk of the posterior mean.
//!
//! cargo run --release --example gp_optimality

use kernel_equiv::*;
use nalgebra::DMatrix;

fn main() -> Result<()> {
    let (p, n, n_ts, sigma2) = (300, 300, 200, 0.1);
    let cov = CovarianceSpec::identity(p)?;
    let kernel = make_polynomial_kernel(0.1, 2)?;
    let x_all: DMatrix<f64> = sample_features(&FeatureModel::gaussian(cov.clone()), n + n_ts, 8)?;
    let (y, yt) = gp_teacher_outputs(&kernel, &x_all, n, sigma2, 9)?;
    let x = x_all.rows(0, n).into_owned();
    let xt = x_all.rows(n, n_ts).into_owned();

    let post = gp_posterior(&kernel, &x, &y, &xt, sigma2)?;
    let (l1, l2) = equivalent_regularizers(sigma2, &coefficients(&kernel, &cov)?, p)?;
    let f_lin = fit_linear_ridge(&x, &y, l1, l2)?.predict(&xt)?;
    let e_lin = linear_risk(&post, &f_lin)?;

    let y_sq = yt.norm_squared() / n_ts as f64;
    println!("posterior mean test error {:.4}", normalized_test_error(&yt, &post.mean)?);
    println!("linear model test error   {:.4}", normalized_test_error(&yt, &f_lin)?);
    println!("Bayes risk (normalized)   {:.4}", post.variance.mean() / y_sq);
    println!("linear risk (normalized)  {:.4}", e_lin.mean() / y_sq);
    Ok(())
}
