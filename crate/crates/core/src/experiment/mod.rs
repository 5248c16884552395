//! Sweeps, run artifacts and the acceptance suite.

mod acceptance;
mod config;
mod run;

pub use acceptance::{
    run_acceptance, run_criterion, AcceptanceConfig, AcceptanceReport, CriterionResult, Tolerances,
    CRITERIA,
};
pub use config::{
    AgingPattern, Axis, ExperimentConfig, GridConfig, OutputFormat, SweepKind, BUNDLED,
    DEFAULT_ROOT_SEED,
};
pub use run::{
    apply_overrides, compute, memoryless_pair, run, FrontierRecord, Manifest, ModelSource,
    OracleRow, OutputFile, ReductionRow, RunOptions, RunOutcome, RunSummary, SweepResult, Table,
    UtilityRow, DEFAULT_LAMBDA, EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION,
};
