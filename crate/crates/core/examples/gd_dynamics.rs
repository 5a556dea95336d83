//! Full-batch gradient descent for the kernel model and the scaled linear model,
//! evaluated in closed form at selected steps.
//!
//! cargo run --release --example gd_dynamics

use kernel_equiv::*;

fn main() -> Result<()> {
    let (p, n, lambda) = (400, 200, 0.05);
    let cov = CovarianceSpec::identity(p)?;
    let model = FeatureModel::gaussian(cov.clone());
    let x = sample_features(&model, n, 5)?;
    let xt = sample_features(&model, 100, 6)?;
    let teacher = relu_teacher(&[50], p, 7)?;
    let (y, yt) = (teacher.eval_rows(&x)?, teacher.eval_rows(&xt)?);

    let kernel = make_polynomial_kernel(0.1, 2)?;
    let coeffs = coefficients(&kernel, &cov)?;
    let k = gram(&kernel, &x)?;
    let cross = cross_gram(&kernel, &xt, &x)?;

    let steps = [0, 1, 10, 100, 1000];
    let eta = SpectralSystem::new(&linalg::add_diagonal(k.matrix(), lambda), &cross, &y)?.default_eta();
    let f_k = gd_kernel_trajectory(&k, &cross, &y, lambda, Some(eta), &steps)?;
    let f_l = gd_linear_trajectory(&x, &xt, &y, &coeffs, lambda, Some(eta), &steps)?;

    println!("eta = {eta:.4}");
    println!("{:>6} {:>12} {:>12}", "t", "kernel", "linear");
    for &t in &steps {
        let ek = normalized_test_error(&yt, f_k.at(t).unwrap())?;
        let el = normalized_test_error(&yt, f_l.at(t).unwrap())?;
        println!("{t:>6} {ek:>12.5} {el:>12.5}");
    }
    Ok(())
}
