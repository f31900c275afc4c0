//! Configuration, experiment sweeps and tabular output.

mod config;
mod run;
mod table;
mod validate;

pub use config::{parse_config, ExperimentKind, ExperimentSpec, OutputFormat, Sweep, KNOWN_KEYS};
pub use run::run_experiment;
pub use table::{round_sig9, write_csv, write_json, ResultRow, ResultTable, CSV_HEADER};
pub use validate::{all_passed, run_checks, Check};
