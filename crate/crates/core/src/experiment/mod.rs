//! Configuration-driven SNR sweeps, presets and result files.

pub mod config;
pub mod presets;
pub mod report;
pub mod runner;
pub mod spec;

pub use config::ConfigMap;
pub use presets::{preset, PRESET_NAMES};
pub use report::{csv_string, fer_slope, outage_slope, overlay_theory, read_csv, write_csv, Overlay, SlopeOptions, SlopeOutcome, CSV_COLUMNS};
pub use runner::{run_experiment, run_experiment_as, simulate_outage, simulate_point, PointResult, ResultRow, ResultTable, TraceRecord, FRAME_CHUNK};
pub use spec::{ExperimentSpec, OutageModel, OutageSpec, RotationChoice};
