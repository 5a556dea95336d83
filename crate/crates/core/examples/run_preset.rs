//! Run a bundled preset at reduced size and write CSV plus JSON sidecar.
//!
//! cargo run --release --example run_preset -- equivalence /tmp/out/equivalence.csv

use std::path::PathBuf;

use kernel_equiv::experiments::{preset, run_experiment, write_outputs};

fn main() -> kernel_equiv::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "gp_optimality".into());
    let out = PathBuf::from(args.next().unwrap_or_else(|| format!("results/{name}.csv")));

    let mut config = preset(&name)?;
    println!("{}", config.description);
    config.p_list = vec![100];
    config.trials = 2;
    let output = run_experiment(&config)?;
    let sidecar = write_outputs(&config, &output, &out)?;
    println!(
        "{} rows, {} failed trials -> {} ({})",
        output.records.len() + output.gap_records.len(),
        output.failures.len(),
        out.display(),
        sidecar.display()
    );
    Ok(())
}
