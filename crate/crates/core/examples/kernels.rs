//! Kernel descriptors, Gram matrices and the ReLU NTK.
//!
//! cargo run --release --example kernels

use kernel_equiv::*;

fn main() -> Result<()> {
    let x = sample_features(&FeatureModel::gaussian(CovarianceSpec::identity(8)?), 4, 1)?;

    for spec in [
        KernelSpec::Linear,
        KernelSpec::Polynomial { c: 0.1, d: 2 },
        KernelSpec::Rbf { bandwidth: 1.0 },
        KernelSpec::Ntk { depth: 2 },
    ] {
        let k = spec.build()?;
        let g = gram(&k, &x)?;
        println!("{:<14} K[0,1] = {:+.5}  K[0,0] = {:.5}", spec.label(), g.matrix()[(0, 1)], g.matrix()[(0, 0)]);
        println!("{:<14} dg/dz2 at (1,0,1) = {:.5}, d2g/dz2^2 = {:.5}", "", k.d_dz2(1.0, 0.0, 1.0), k.d2_dz2(1.0, 0.0, 1.0));
    }

    // the one-hidden-layer network's NTK is a single recursion step
    let u = [1.0, 0.5, -0.3];
    let v = [0.8, 0.1, -0.2];
    let analytic = ntk_value(&u, &v, 1)?;
    let empirical = empirical_ntk(20_000, &u, &v, 4, 7)?;
    println!("NTK(u, v): recursion {analytic:.5}, width-20000 network {empirical:.5}");
    println!("kappa0(0) = {}, kappa1(0) = {:.6}", kappa0(0.0), kappa1(0.0));
    Ok(())
}
