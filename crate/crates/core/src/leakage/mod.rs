//! Leakage bounds for aged, noised releases of correlated sequences, the
//! single-sequence and correlation-blind baselines, and an exact/sampled
//! likelihood-ratio oracle.

mod bounds;
mod distance;
mod oracle;
mod reductions;
mod report;

pub use bounds::{
    adp_leakage, baseline_bounds, cmc_leakage, k_sensitivity, loose_bound, tight_bound, Baselines,
    LooseBound,
};
pub use distance::{
    aged_tv_distance, aged_tv_distance_from_law, bounded_aged_correlation,
    bounded_aged_correlation_detailed, temporal_delta, BoundedCorrelation,
};
pub use oracle::{
    oracle_leakage, OracleEstimate, OraclePath, WorstEvent, MIN_CELL_COUNT, NOISE_SPAN, THETA_POINTS,
    Z_95,
};
pub(crate) use oracle::sample_aged_pair;
pub use reductions::{
    verify_reductions, ReductionCase, ReductionCheck, ReductionOutcome, REDUCTION_MAX_AGE,
    REDUCTION_TOL,
};
pub use report::{
    evaluate_leakage, write_rows_csv, write_rows_json, LeakageParams, LeakageReport, LeakageRow,
    ReportOptions,
};
