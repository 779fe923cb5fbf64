//! Experiment drivers: convergence sweeps over `N`, excitation-cutoff
//! sweeps, power-law fits, inequality audits, and their CSV/JSON output.

mod audit;
mod emit;
mod fit;
mod sweep;

pub use audit::{
    audit_inequalities, audit_inequalities_with, temple_check, AuditCheck, AuditOptions, AuditReport, ShapeFit, TrendReport,
};
pub use emit::{
    read_cutoff_csv, read_records_csv, write_cutoff_csv, write_records_csv, write_report_json,
    CUTOFF_HEADER, RECORD_HEADER,
};
pub use fit::{fit_level, fit_power_law, nondecreasing_within, nonincreasing_within, PowerLawFit, FLOOR};
pub use sweep::{
    run_convergence_sweep, run_convergence_sweep_with, run_cutoff_sweep, ConvergenceRecord, CutoffRecord,
    SweepOptions,
};
