//! Mean squared error of an aged, noised release.

use crate::cmc::{aged_joint_law, AgedJointLaw, AoiVector, JointKernel};
use crate::error::{CsdpError, Result};
use crate::leakage::sample_aged_pair;
use crate::mechanism::laplace_draw;
use crate::query::QuerySpec;
use crate::scalar::{from_usize, lit, Scalar};
use crate::seeds::rng_from_seed;

pub const MIN_MSE_SAMPLES: usize = 100;

fn check_eps<T: Scalar>(eps_c: T) -> Result<()> {
    if !(eps_c > T::zero()) || !eps_c.is_finite() {
        return Err(CsdpError::param("eps_c", "must be positive and finite"));
    }
    Ok(())
}

fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// `E ||f(aged) - f(current)||²` under the stationary joint law.
pub fn aging_error<T: Scalar>(law: &AgedJointLaw<T>, query: &QuerySpec<T>) -> T {
    let space = law.space();
    let n = law.size();
    let values: Vec<Vec<T>> = (0..n).map(|x| query.evaluate(&space.decode(x))).collect();
    let mut total = T::zero();
    for x in 0..n {
        for z in 0..n {
            let p = law.joint(z, x);
            if p != T::zero() {
                total = total + p * squared_distance(&values[z], &values[x]);
            }
        }
    }
    total
}

/// Laplace noise variance summed over outputs: `d · 2 (s_1(f)/ε_C)²`.
pub fn noise_variance<T: Scalar>(query: &QuerySpec<T>, eps_c: T) -> Result<T> {
    check_eps(eps_c)?;
    let b = query.global_sensitivity() / eps_c;
    Ok(from_usize::<T>(query.output_dim()) * lit::<T>(2.0) * b * b)
}

/// Aging error plus noise variance, both exact.
pub fn mse_exact<T: Scalar>(
    kernel: &JointKernel<T>,
    age: &AoiVector,
    query: &QuerySpec<T>,
    eps_c: T,
) -> Result<T> {
    let noise = noise_variance(query, eps_c)?;
    let law = aged_joint_law(kernel, age)?;
    Ok(aging_error(&law, query) + noise)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseEstimate<T> {
    pub mean: T,
    pub std_error: T,
    pub samples: usize,
}

/// Monte-Carlo MSE over independent stationary paths and noise draws.
pub fn mse_simulated<T: Scalar>(
    kernel: &JointKernel<T>,
    age: &AoiVector,
    query: &QuerySpec<T>,
    eps_c: T,
    samples: usize,
    seed: u64,
) -> Result<MseEstimate<T>> {
    if samples < MIN_MSE_SAMPLES {
        return Err(CsdpError::param(
            "samples",
            format!("at least {MIN_MSE_SAMPLES} required, got {samples}"),
        ));
    }
    check_eps(eps_c)?;
    let space = kernel.space();
    age.check_len(&space)?;
    let sampler = kernel.sampler()?;
    let n = kernel.size();
    let values: Vec<Vec<T>> = (0..n).map(|x| query.evaluate(&space.decode(x))).collect();
    let b = query.global_sensitivity() / eps_c;
    let horizon = age.max_age();
    let mut rng = rng_from_seed(seed);
    let (mut sum, mut sum_sq) = (T::zero(), T::zero());
    for _ in 0..samples {
        let (z, x) = sample_aged_pair(&space, &sampler, age, horizon, &mut rng);
        let err: T = values[z]
            .iter()
            .zip(&values[x])
            .map(|(&fz, &fx)| {
                let e = fz + laplace_draw(&mut rng, b) - fx;
                e * e
            })
            .sum();
        sum = sum + err;
        sum_sq = sum_sq + err * err;
    }
    let count = from_usize::<T>(samples);
    let mean = sum / count;
    let var = ((sum_sq - count * mean * mean) / (count - T::one())).max(T::zero());
    Ok(MseEstimate {
        mean,
        std_error: (var / count).sqrt(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmc::{joint_kernel, CmcModel, CouplingWeights, StateSpace, TransitionMatrix};
    use crate::query::BuiltinQuery;

    fn flip() -> JointKernel<f64> {
        joint_kernel(
            &CmcModel::<f64>::shared_transition(
                TransitionMatrix::symmetric_flip(0.3).unwrap(),
                CouplingWeights::self_coupling(1, 1.0).unwrap(),
            )
            .unwrap(),
        )
        .unwrap()
    }

    fn identity_query() -> QuerySpec<f64> {
        QuerySpec::builtin(BuiltinQuery::Sum, StateSpace::new(1, 2).unwrap())
    }

    #[test]
    fn age_zero_is_noise_only() {
        let q = identity_query();
        let v = mse_exact(&flip(), &AoiVector::zeros(1), &q, 2.0).unwrap();
        assert!((v - 2.0 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn one_step_disagreement() {
        let law = aged_joint_law(&flip(), &AoiVector::uniform(1, 1)).unwrap();
        assert!((aging_error(&law, &identity_query()) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn simulated_is_seeded_and_consistent() {
        let k = joint_kernel(&CmcModel::<f64>::coupled_pair(0.3, 0.75).unwrap()).unwrap();
        let q = QuerySpec::builtin(BuiltinQuery::Mean, StateSpace::new(2, 2).unwrap());
        let age = AoiVector::uniform(2, 2);
        let a = mse_simulated(&k, &age, &q, 2.0, 20_000, 1).unwrap();
        assert_eq!(a, mse_simulated(&k, &age, &q, 2.0, 20_000, 1).unwrap());
        let exact = mse_exact(&k, &age, &q, 2.0).unwrap();
        assert!((a.mean - exact).abs() < 3.0 * a.std_error);
        assert!(mse_simulated(&k, &age, &q, 2.0, 99, 1).is_err());
    }

    #[test]
    fn huge_budget_fresh_data_is_near_zero() {
        let q = identity_query();
        let est = mse_simulated(&flip(), &AoiVector::zeros(1), &q, 1e6, 1000, 2).unwrap();
        assert!(est.mean < 1e-6);
    }
}
