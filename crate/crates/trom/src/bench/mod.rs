//! Benchmark cases, error and runtime metrics, experiment orchestration and
//! CSV report emission.

mod cases;
mod experiment;
mod metrics;

pub use cases::{gauss_legendre_5, project_gl5, test2_exact, test2_projection, BenchCase};
pub use experiment::{
    alignment_anchor_cell, build_offline, interior_uniform, run_experiment, run_sweep, select_mesh,
    OfflineArtifacts,
};
pub use metrics::{
    compute_error, emit_report, experiment_row, ErrorReport, ExperimentRow, RomVariant,
    RuntimeReport, TargetError, UNSTABLE_ERROR_THRESHOLD,
};
