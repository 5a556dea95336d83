use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kernel_equiv::experiments::{
    default_preset, preset, preset_names, run_experiment, write_outputs, ExperimentConfig, ExperimentKind,
};

/// Kernel vs. linear-model experiments in the proportional regime.
///
/// Exit codes: 0 all trials succeeded, 2 some trials failed, 1 configuration error.
#[derive(Parser, Debug)]
#[command(name = "kernel-equiv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Operator-norm gap between kernel matrix and surrogate.
    GapSweep(RunArgs),
    /// Kernel ridge regression vs. the equivalent linear model.
    Equivalence(RunArgs),
    /// Gradient-descent trajectories of both models.
    GdDynamics(RunArgs),
    /// Linear model vs. the Bayes-optimal GP posterior.
    GpOptimality(RunArgs),
    /// GP pipeline on low-rank mixture features.
    Counterexample(RunArgs),
    /// List bundled presets.
    Presets,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled preset name (see `presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; the JSON sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Feature dimension(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    p: Vec<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Print the resolved config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

fn resolve(kind: ExperimentKind, args: &RunArgs) -> kernel_equiv::Result<ExperimentConfig> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::from_file(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => default_preset(kind),
    };
    if config.experiment != kind {
        return Err(kernel_equiv::Error::Config(format!(
            "config describes `{}` but the `{}` subcommand was used",
            config.experiment.as_str(),
            kind.as_str()
        )));
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if !args.p.is_empty() {
        config.p_list = args.p.clone();
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(out) = &args.out {
        config.output_path = Some(out.clone());
    }
    if config.output_path.is_none() {
        config.output_path = Some(PathBuf::from(format!("results/{}.csv", kind.as_str())));
    }
    config.validate()?;
    Ok(config)
}

fn run(kind: ExperimentKind, args: &RunArgs) -> ExitCode {
    let config = match resolve(kind, args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if args.print_config {
        match config.to_toml_string() {
            Ok(s) => {
                print!("{s}");
                return ExitCode::SUCCESS;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
    }
    let output = match run_experiment(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let csv_path = config.output_path.clone().unwrap_or_default();
    match write_outputs(&config, &output, &csv_path) {
        Ok(side) => eprintln!(
            "wrote {} rows to {} (sidecar {})",
            output.records.len() + output.gap_records.len(),
            csv_path.display(),
            side.display()
        ),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    if output.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{} trial(s) failed; see the sidecar", output.failures.len());
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match &cli.command {
        Command::GapSweep(a) => run(ExperimentKind::GapSweep, a),
        Command::Equivalence(a) => run(ExperimentKind::Equivalence, a),
        Command::GdDynamics(a) => run(ExperimentKind::GdDynamics, a),
        Command::GpOptimality(a) => run(ExperimentKind::GpOptimality, a),
        Command::Counterexample(a) => run(ExperimentKind::Counterexample, a),
        Command::Presets => {
            for name in preset_names() {
                let desc = preset(name).map(|c| c.description).unwrap_or_default();
                println!("{name:<24} {desc}");
            }
            ExitCode::SUCCESS
        }
    }
}
