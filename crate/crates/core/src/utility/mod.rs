//! Utility loss and the privacy-utility optimizer.

mod mse;
mod optimizer;

pub use mse::{aging_error, mse_exact, mse_simulated, noise_variance, MseEstimate, MIN_MSE_SAMPLES};
pub use optimizer::{
    default_grids, evaluate_grid, log_spaced, select_optimum, solve_mechanism, solve_p1,
    tradeoff_frontier, uniform_age_grid, write_frontier_csv, FrontierRow, FrontierTable, GridPoint,
    LeakageKind, Mechanism, TradeoffSolution, UtilitySpec,
};
