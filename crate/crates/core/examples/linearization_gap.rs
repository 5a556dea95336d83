//! Surrogate coefficients and how fast ||K - M|| / ||K|| shrinks with p.
//!
//! cargo run --release --example linearization_gap

use kernel_equiv::*;

fn main() -> Result<()> {
    let kernel = make_ntk_kernel(3)?;
    let c = coefficients(&kernel, &CovarianceSpec::identity(400)?)?;
    println!("ntk depth 3: tau = {}, c0 = {:.4}, c1 = {:.4}, c2 = {:.4}", c.tau, c.c0, c.c1, c.c2);

    let x = sample_features(&FeatureModel::gaussian(CovarianceSpec::identity(400)?), 400, 3)?;
    let plug_in = estimate_coefficients(&kernel, &x)?;
    println!("plug-in from data: c0 = {:.4}, c1 = {:.4}, c2 = {:.4}", plug_in.c0, plug_in.c1, plug_in.c2);

    for spec in [KernelSpec::Polynomial { c: 0.1, d: 2 }, KernelSpec::Ntk { depth: 3 }] {
        let sweep = gap_sweep(&GapSweepConfig {
            kernel: spec.clone(),
            covariance: CovarianceFamily::Identity,
            p_list: vec![100, 200, 400],
            beta: 1.0,
            trials: 3,
            seed: 11,
        })?;
        for p in [100, 200, 400] {
            println!("{:<14} p = {p:<4} median relative gap {:.4}", spec.label(), sweep.median_relative_gap(p).unwrap());
        }
    }
    Ok(())
}
