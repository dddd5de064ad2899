//! Scenario loading, closed-loop simulation, metrics and reports.

mod export;
mod metrics;
mod path;
mod scenario;
mod sim;

pub use export::{
    export_report, plan_svg, read_log_csv, read_log_dir, report_from_dir, report_table,
    trajectory_svg, write_log_csv, REPORT_COLUMNS, REPORT_FILE,
};
pub use metrics::{
    compute_metrics, lap_time, mean_std, vehicle_metrics, MetricsReport, VehicleMetrics,
};
pub use path::{circle, lemniscate, ReferencePath, CLOSURE_TOL};
pub use scenario::{load_scenario, parse_scenario, save_scenario, PathSpec, Scenario, VehicleSpec};
pub use sim::{
    audit_separation, run_scenario, Cycle, LogRow, RunConfig, RunLog, Simulation, VehicleLog,
};
