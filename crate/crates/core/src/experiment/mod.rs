//! Batch experiments: sweeps over the standard scenario that regenerate each figure's
//! data, covertness audits of the stored allocations, and the default parameter table.

mod audit;
mod defaults;
mod plot;
mod run;
mod spec;

pub use audit::{audit_run, AuditOptions, AuditRow, AuditSummary};
pub use defaults::{format_defaults, list_defaults, DefaultRow};
pub use plot::plot_script;
pub use run::{
    join_values, parse_values, read_csv, run_experiment, FvRow, QsRow, RunSummary, SummaryRow, TraceRow, TvRow,
};
pub use spec::{AuditSettings, ExperimentSpec, FigureId, FvSettings, QsSettings, Regime, TvSettings, FAST_RECEIVERS};
