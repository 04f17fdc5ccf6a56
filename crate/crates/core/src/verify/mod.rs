//! Manufactured problems, Ritz–Volterra projections and convergence
//! studies.

mod problems;
mod ritz;
mod study;

pub use problems::{manufactured_problem, Problem, CATALOG};
pub use ritz::{
    mixed_projection_at_zero, ritz_volterra_project_extended, ritz_volterra_project_standard,
    ProjectionTrajectory,
};
pub use study::{
    convergence_study, measure_run, projection_study, temporal_order_study, ConvergenceReport, LevelErrors,
    Metric, StudySpec, TemporalReport, EXACT_THRESHOLD, REPORT_HEADER,
};
