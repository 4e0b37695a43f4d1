//! Configuration, seeding, ensemble orchestration, persistence and the
//! forced/unforced cross-check.

mod config;
mod crosscheck;
mod run;
pub mod seed;

pub use config::{
    min_resolution, AnalysisConfig, EnsembleConfig, ExperimentConfig, GridConfig, InitialConfig,
    OutputConfig, PhysicsConfig, RadiiConfig, SamplingConfig, VelocityConfig,
};
pub use crosscheck::{ito_cross_check, CrossCheckReport, ShellComparison};
pub use run::{
    analyze, audit_member, density_row, persist, reporting_window, run_ensemble, simulate_members,
    write_densities, write_densities_to, write_spectrum, write_spectrum_to, DensityRow,
    EnsembleRun, RunResult, WORKERS_ENV,
};
pub use seed::derive_seed;
