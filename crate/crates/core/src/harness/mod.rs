//! Scenario configuration, batch runs, metrics and export.

mod export;
mod run;
mod scenario;
pub mod verify;

pub use export::{
    export, read_json, write_csv, write_json, ExportDoc, ExportFormat, ExportRow, CSV_COLUMNS,
};
pub use run::{
    build_controller, check_contract, initial_state, run, run_batch, ContractCheck, RunMetrics,
};
pub use scenario::{
    builtin, builtin_names, builtin_source, load_scenario, resolve, Contract, ControllerKind,
    ControllerSpec, InitialState, Scenario, DEFAULT_DT, DEFAULT_DURATION, DEFAULT_SETTLE_TOL,
    DEFAULT_STRIDE,
};
