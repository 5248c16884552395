//! Coupling Markov chains: models, marginal evolution, stationarity and the
//! exact joint laws that the leakage bounds are computed from.

mod aged;
mod file;
mod kernel;
mod model;
mod space;
mod spectral;
mod stationary;

pub use aged::{aged_joint_law, backward_conditional, AgedJointLaw, ConditionalTable};
pub use file::{load_model, model_to_toml, parse_model, save_model, MODEL_FORMAT, ORIENTATION};
pub use kernel::{
    joint_kernel, joint_kernel_with_cap, sample_trajectory, Initial, JointKernel, TrajectorySampler,
    MAX_TABLE_ENTRIES,
};
pub use model::{
    build_block_matrix, evolve_distribution, validate_model, CmcModel, CouplingWeights,
    DistributionVector, RawModel, TransitionMatrix, ValidationReport, Violation,
};
pub use space::{AoiVector, StateSpace, DEFAULT_ENUMERATION_CAP};
pub use spectral::{spectral_check, SpectralReport};
pub use stationary::{stationary_default, stationary_distribution, DEFAULT_MAX_ITER, DEFAULT_TOL};
