//! Eigenvalue moduli of the block matrix `Q`.

use nalgebra::{DMatrix, Schur};
use serde::Serialize;

use super::model::{build_block_matrix, CmcModel};
use crate::error::{CsdpError, Result};
use crate::scalar::{to_f64, Scalar};

const SPECTRAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    /// All eigenvalue moduli of `Q`, largest first.
    pub moduli: Vec<f64>,
    pub dominant_modulus: f64,
    /// Second-largest modulus; governs the mixing rate.
    pub second_modulus: f64,
    /// Dominant modulus equals 1 within 1e-6.
    pub dominant_is_one: bool,
    /// Set when some modulus exceeds 1 by more than 1e-6.
    pub bound_violated: bool,
    /// Set when the second modulus is 1 within 1e-6.
    pub no_spectral_gap: bool,
}

pub fn spectral_check<T: Scalar>(model: &CmcModel<T>) -> Result<SpectralReport> {
    let q = build_block_matrix(model);
    let n = q.rows();
    let dense = DMatrix::<f64>::from_fn(n, n, |i, j| to_f64(q[(i, j)]));
    let schur = Schur::try_new(dense, f64::EPSILON, 10_000)
        .ok_or_else(|| CsdpError::EigenFailure("Schur iteration did not converge".into()))?;
    let mut moduli: Vec<f64> = schur.complex_eigenvalues().iter().map(|c| c.norm()).collect();
    if moduli.iter().any(|v| !v.is_finite()) {
        return Err(CsdpError::EigenFailure("non-finite eigenvalue".into()));
    }
    moduli.sort_by(|a, b| b.total_cmp(a));
    let dominant = moduli[0];
    let second = moduli.get(1).copied().unwrap_or(0.0);
    Ok(SpectralReport {
        dominant_is_one: (dominant - 1.0).abs() <= SPECTRAL_TOL,
        bound_violated: dominant > 1.0 + SPECTRAL_TOL,
        no_spectral_gap: second >= 1.0 - SPECTRAL_TOL,
        dominant_modulus: dominant,
        second_modulus: second,
        moduli,
    })
}
