//! Command implementations, file formats and the Monte-Carlo replication engine
//! behind the `l2calib` binary.

mod commands;
mod config;
mod io;
mod simulate;

pub use commands::{
    calibrate_dataset, check_discrepancy, cmd_calibrate, cmd_discrepancy, discrepancy_curve,
    write_calibration_rows, write_discrepancy_csv, CalibrationRow, DiscrepancyRow,
};
pub use config::{ExampleKind, RunConfig};
pub use io::{fmt_num, read_dataset, read_dataset_from, read_simulator_runs};
pub use simulate::{
    check_report, cmd_simulate, run_simulation, ReportRow, SimulationReport,
};
