//! Low-rank mixture inputs: the kernel posterior beats the linear model.
//!
//! cargo run --release --example counterexample

use kernel_equiv::experiments::{default_preset, run_experiment, ExperimentKind, Model};
use kernel_equiv::stats::mean;

fn main() -> kernel_equiv::Result<()> {
    let mut config = default_preset(ExperimentKind::Counterexample);
    config.p_list = vec![300];
    config.n_ratios = vec![0.5, 1.0, 2.0];
    config.trials = 2;
    let out = run_experiment(&config)?;
    for &n in &[150, 300, 600] {
        let at = |m: Model| {
            let v: Vec<f64> = out
                .records
                .iter()
                .filter(|r| r.n == n && r.model == m && r.metric == "test_error")
                .map(|r| r.value)
                .collect();
            mean(&v).unwrap()
        };
        println!("n = {n:<4} kernel {:.4}  linear {:.4}", at(Model::GpOpt), at(Model::Linear));
    }
    Ok(())
}
