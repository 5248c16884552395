//! Stationary distribution of the marginal evolution by power iteration.

use super::model::{build_block_matrix, pair_label, CmcModel, DistributionVector};
use crate::error::{CsdpError, Result};
use crate::linalg::{l1_distance, power_iterate};
use crate::scalar::{lit, to_f64, Scalar};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Stationary `pi*` of the block matrix `Q`, iterated from the uniform stacked vector.
///
/// Every `P^(jk)` must be irreducible. A second iteration from a point mass
/// exposes periodic chains (for which the uniform vector can be a fixed
/// point) and chains with more than one stationary vector.
pub fn stationary_distribution<T: Scalar>(
    model: &CmcModel<T>,
    tol: T,
    max_iter: usize,
) -> Result<DistributionVector<T>> {
    if !(tol > T::zero()) {
        return Err(CsdpError::param("tol", "must be positive"));
    }
    let s = model.num_sequences();
    let m = model.num_states();
    for j in 0..s {
        for k in 0..s {
            if !model.transition(j, k).is_irreducible() {
                return Err(CsdpError::Reducible {
                    matrix: pair_label(j, k),
                });
            }
        }
    }
    let q = build_block_matrix(model);
    let step = |v: &[T]| q.mul_vec(v);
    let uniform = DistributionVector::<T>::uniform(s, m).stacked();
    let main = power_iterate(uniform, step, tol, max_iter)?;
    let probe = power_iterate(
        DistributionVector::<T>::point_mass(s, m, 0).stacked(),
        step,
        tol,
        max_iter,
    )?;
    let gap = l1_distance(&main.vector, &probe.vector);
    if gap > (tol * lit(1e4)).max(lit(1e-6)) {
        return Err(CsdpError::NonUniqueStationary { gap: to_f64(gap) });
    }
    let blocks = main
        .vector
        .chunks(m)
        .map(|b| {
            let sum: T = b.iter().copied().sum();
            b.iter().map(|&v| v / sum).collect()
        })
        .collect();
    DistributionVector::new(blocks)
}

/// [`stationary_distribution`] with the default tolerance and iteration cap.
pub fn stationary_default<T: Scalar>(model: &CmcModel<T>) -> Result<DistributionVector<T>> {
    stationary_distribution(model, lit(DEFAULT_TOL), DEFAULT_MAX_ITER)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmc::{CouplingWeights, TransitionMatrix};

    #[test]
    fn paper_setup_is_uniform() {
        let model = CmcModel::<f64>::coupled_pair(0.3, 0.75).unwrap();
        let pi = stationary_default(&model).unwrap();
        for b in pi.blocks() {
            assert!((b[0] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn two_state_fixed_point() {
        let p = TransitionMatrix::<f64>::from_rows(&[vec![0.9, 0.2], vec![0.1, 0.8]]).unwrap();
        let model =
            CmcModel::<f64>::shared_transition(p, CouplingWeights::self_coupling(1, 1.0).unwrap()).unwrap();
        let pi = stationary_default(&model).unwrap();
        assert!((pi.block(0)[0] - 2.0 / 3.0).abs() < 1e-9);
        assert!((pi.block(0)[1] - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn permutation_chain_fails() {
        let p = TransitionMatrix::<f64>::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let model =
            CmcModel::<f64>::shared_transition(p, CouplingWeights::self_coupling(1, 1.0).unwrap()).unwrap();
        assert!(matches!(
            stationary_default(&model),
            Err(CsdpError::Periodic { period: 2 })
        ));
    }

    #[test]
    fn reducible_chain_named() {
        let model = CmcModel::<f64>::shared_transition(
            TransitionMatrix::<f64>::identity(2),
            CouplingWeights::self_coupling(2, 0.5).unwrap(),
        )
        .unwrap();
        match stationary_default(&model) {
            Err(CsdpError::Reducible { matrix }) => assert_eq!(matrix, "P^(11)"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn iteration_budget_enforced() {
        let p = TransitionMatrix::<f64>::from_rows(&[vec![0.9, 0.2], vec![0.1, 0.8]]).unwrap();
        let model =
            CmcModel::<f64>::shared_transition(p, CouplingWeights::self_coupling(1, 1.0).unwrap()).unwrap();
        assert!(matches!(
            stationary_distribution(&model, 1e-12, 3),
            Err(CsdpError::NotConverged { iterations: 3, .. })
        ));
    }
}
