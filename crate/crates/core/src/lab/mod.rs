//! Config-driven experiment runner.

pub mod config;
pub mod output;
pub mod run;

pub use config::{Check, ConfigError, CountSpec, ExperimentConfig, LambdaPolicy, ProblemSpec, Tolerances};
pub use output::{compare_fields, compare_records, emit_contour_data, read_contour_data, ContourData, FieldComparison};
pub use run::{run, write_outputs, CellRecord, CellSpec, CheckResult, Context, LabError, RunOutput, RunRecord, RunStatus};
