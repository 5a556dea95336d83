//! Seeded end-to-end experiments emitting CSV records plus a JSON sidecar.
//!
//! Record CSV columns: `experiment,trial,seed,p,n,model,t,metric,value`.
//! Gap sweeps use their own schema: `p,n,trial,seed,gap_abs,gap_rel,kernel,beta`.

pub mod config;
pub mod presets;
pub mod records;
pub mod runner;

pub use config::{ExperimentConfig, ExperimentKind};
pub use presets::{default_preset, preset, preset_names, PRESETS};
pub use records::{read_records_csv, write_records_csv, ExperimentRecord, FailureRecord, Model, CSV_COLUMNS};
pub use runner::{
    csv_bytes, run_counterexample, run_equivalence, run_experiment, run_gap_sweep, run_gd_dynamics,
    run_gp_optimality, sidecar, sidecar_path, trial_seed, write_outputs, RunOutput, Sidecar, TrialSeed,
};
