//! Configuration, orchestration and result persistence for simulator runs.

mod config;
mod output;
mod run;
mod verify;

pub use config::{load_config, parse_config, save_config, ChannelMode, ExperimentConfig, PowerGrid, Scheme};
pub use output::{emit_tradeoff_csv, fmt_num, read_tradeoff_csv, sha256_file, SIG_DIGITS};
pub use run::{
    resolve_out_dir, result_header, run_experiment, trace_instance, trial_channel, write_trace_lines, ChannelRecord,
    RunManifest, RunStatus, TraceLine, MANIFEST_FILE, RESULTS_FILE, TRACE_FILE, TRADEOFF_FILE,
};
pub use verify::{verify_config, CheckResult};
