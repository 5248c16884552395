//! Release mechanism: per-sequence aging followed by Laplace noise.

mod database;
mod laplace;
mod release;

pub use database::{age_data, SequenceDatabase};
pub use laplace::{laplace_cdf, laplace_draw, laplace_log_cdf, laplace_log_sf, laplace_sample};
pub use release::{append_results_log, release, FranConfig, LogRecord, MechanismOutput};
