//! Correlated-sequence differential privacy.
//!
//! Coupled Markov chain models of several categorical streams, the
//! aging-plus-Laplace release mechanism, its leakage bounds with an
//! enumeration oracle, a privacy-utility optimizer, and a sweep driver.
//!
//! Numeric types are generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar.

pub mod cmc;
pub mod error;
pub mod experiment;
pub mod leakage;
pub mod linalg;
pub mod mechanism;
pub mod query;
pub mod scalar;
pub mod seeds;
pub mod stats;
pub mod utility;

pub use error::{CsdpError, Result};

pub type CmcModel64 = cmc::CmcModel<f64>;
pub type TransitionMatrix64 = cmc::TransitionMatrix<f64>;
pub type CouplingWeights64 = cmc::CouplingWeights<f64>;
pub type JointKernel64 = cmc::JointKernel<f64>;
pub type DistributionVector64 = cmc::DistributionVector<f64>;
pub type QuerySpec64 = query::QuerySpec<f64>;
pub type LeakageReport64 = leakage::LeakageReport<f64>;
pub type FranConfig64 = mechanism::FranConfig<f64>;
pub type UtilitySpec64 = utility::UtilitySpec<f64>;
pub type TradeoffSolution64 = utility::TradeoffSolution<f64>;

pub type CmcModel32 = cmc::CmcModel<f32>;
pub type TransitionMatrix32 = cmc::TransitionMatrix<f32>;
pub type CouplingWeights32 = cmc::CouplingWeights<f32>;
pub type JointKernel32 = cmc::JointKernel<f32>;
pub type DistributionVector32 = cmc::DistributionVector<f32>;
pub type QuerySpec32 = query::QuerySpec<f32>;
pub type LeakageReport32 = leakage::LeakageReport<f32>;
pub type FranConfig32 = mechanism::FranConfig<f32>;
pub type UtilitySpec32 = utility::UtilitySpec<f32>;
pub type TradeoffSolution32 = utility::TradeoffSolution<f32>;
