//! Exact Markov kernel on joint snapshots.
//!
//! Given the current snapshot `a`, the next states of the sequences are drawn
//! independently, sequence `j` from `sum_k lambda_jk P^(jk)[., a_k]`. The
//! marginals of this chain follow the coupled evolution exactly.

use std::sync::OnceLock;

use rand::Rng as _;

use super::model::{CmcModel, DistributionVector};
use super::space::{StateSpace, DEFAULT_ENUMERATION_CAP};
use super::stationary::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{CsdpError, Result};
use crate::linalg::{l1_distance, power_iterate, Matrix};
use crate::scalar::{from_usize, lit, to_f64, Scalar};
use crate::seeds::{rng_from_seed, Rng};

/// Upper limit on entries of any dense joint table (`N x N`).
pub const MAX_TABLE_ENTRIES: u128 = 1 << 26;

#[derive(Debug, Clone)]
pub struct JointKernel<T> {
    model: CmcModel<T>,
    size: usize,
    // next-state law of sequence j from source a: factors[(a * s + j) * m + b]
    factors: Vec<T>,
    stationary: OnceLock<Result<Vec<T>>>,
}

/// Builds the joint kernel, refusing spaces above [`DEFAULT_ENUMERATION_CAP`].
pub fn joint_kernel<T: Scalar>(model: &CmcModel<T>) -> Result<JointKernel<T>> {
    joint_kernel_with_cap(model, DEFAULT_ENUMERATION_CAP)
}

pub fn joint_kernel_with_cap<T: Scalar>(model: &CmcModel<T>, cap: usize) -> Result<JointKernel<T>> {
    let space = model.space();
    let size = space.enumerable_size(cap)?;
    let (s, m) = (space.num_sequences(), space.num_states());
    let mut factors = vec![T::zero(); size * s * m];
    for a in 0..size {
        for j in 0..s {
            let out = &mut factors[(a * s + j) * m..(a * s + j + 1) * m];
            for k in 0..s {
                let w = model.weights().weight(j, k);
                if w == T::zero() {
                    continue;
                }
                let p = model.transition(j, k);
                let src = space.digit(a, k);
                for (b, o) in out.iter_mut().enumerate() {
                    *o = *o + w * p.prob(b, src);
                }
            }
        }
    }
    Ok(JointKernel {
        model: model.clone(),
        size,
        factors,
        stationary: OnceLock::new(),
    })
}

impl<T: Scalar> JointKernel<T> {
    pub fn model(&self) -> &CmcModel<T> {
        &self.model
    }

    pub fn space(&self) -> StateSpace {
        self.model.space()
    }

    /// Number of joint snapshots `m^s`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Law of sequence `j`'s next state given the joint source snapshot `a`.
    pub fn next_state_law(&self, a: usize, j: usize) -> &[T] {
        let (s, m) = (self.model.num_sequences(), self.model.num_states());
        &self.factors[(a * s + j) * m..(a * s + j + 1) * m]
    }

    /// `Pr[next = b | current = a]`.
    pub fn entry(&self, b: usize, a: usize) -> T {
        let space = self.space();
        (0..space.num_sequences())
            .map(|j| self.next_state_law(a, j)[space.digit(b, j)])
            .fold(T::one(), |acc, v| acc * v)
    }

    /// Next-snapshot law from source `a`.
    pub fn column(&self, a: usize) -> Vec<T> {
        let s = self.model.num_sequences();
        let mut out = vec![T::one()];
        for j in 0..s {
            let law = self.next_state_law(a, j);
            out = out
                .iter()
                .flat_map(|&v| law.iter().map(move |&p| v * p))
                .collect();
        }
        out
    }

    /// One step of the joint chain applied to a distribution over snapshots.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.size];
        for (a, &w) in v.iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            for (o, c) in out.iter_mut().zip(self.column(a)) {
                *o = *o + w * c;
            }
        }
        out
    }

    pub(crate) fn check_table(&self) -> Result<()> {
        let entries = (self.size as u128) * (self.size as u128);
        if entries > MAX_TABLE_ENTRIES {
            return Err(CsdpError::TableTooLarge {
                states: self.size,
                entries,
                limit: MAX_TABLE_ENTRIES,
            });
        }
        Ok(())
    }

    /// Dense kernel, entry `(b, a)` = `Pr[next = b | current = a]`.
    pub fn dense(&self) -> Result<Matrix<T>> {
        self.check_table()?;
        let mut k = Matrix::zeros(self.size, self.size);
        for a in 0..self.size {
            for (b, v) in self.column(a).into_iter().enumerate() {
                k[(b, a)] = v;
            }
        }
        Ok(k)
    }

    /// Stationary law over joint snapshots, computed once on first use.
    pub fn stationary(&self) -> Result<&[T]> {
        self.stationary
            .get_or_init(|| self.compute_stationary())
            .as_ref()
            .map(Vec::as_slice)
            .map_err(Clone::clone)
    }

    fn compute_stationary(&self) -> Result<Vec<T>> {
        let tol: T = lit(DEFAULT_TOL);
        let n = self.size;
        let uniform = vec![T::one() / from_usize::<T>(n); n];
        let main = power_iterate(uniform, |v| self.apply(v), tol, DEFAULT_MAX_ITER)?;
        let mut point = vec![T::zero(); n];
        point[0] = T::one();
        let probe = power_iterate(point, |v| self.apply(v), tol, DEFAULT_MAX_ITER)?;
        let gap = l1_distance(&main.vector, &probe.vector);
        if gap > lit(1e-6) {
            return Err(CsdpError::NonUniqueStationary { gap: to_f64(gap) });
        }
        let sum: T = main.vector.iter().copied().sum();
        Ok(main.vector.into_iter().map(|v| (v / sum).max(T::zero())).collect())
    }

    /// Per-sequence marginals of a joint distribution.
    pub fn marginals(&self, joint: &[T]) -> DistributionVector<T> {
        let space = self.space();
        let (s, m) = (space.num_sequences(), space.num_states());
        let mut blocks = vec![vec![T::zero(); m]; s];
        for (x, &p) in joint.iter().enumerate() {
            for (j, block) in blocks.iter_mut().enumerate() {
                let d = space.digit(x, j);
                block[d] = block[d] + p;
            }
        }
        DistributionVector::from_blocks_unchecked(m, blocks)
    }

    /// Joint law with independent per-sequence marginals.
    pub fn product_distribution(&self, pi: &DistributionVector<T>) -> Result<Vec<T>> {
        let space = self.space();
        if pi.num_sequences() != space.num_sequences() || pi.num_states() != space.num_states() {
            return Err(CsdpError::DimensionMismatch {
                what: "distribution vector length".into(),
                expected: space.num_sequences() * space.num_states(),
                got: pi.num_sequences() * pi.num_states(),
            });
        }
        Ok((0..self.size)
            .map(|x| {
                (0..space.num_sequences())
                    .map(|j| pi.block(j)[space.digit(x, j)])
                    .fold(T::one(), |a, b| a * b)
            })
            .collect())
    }

    pub fn sampler(&self) -> Result<TrajectorySampler> {
        let stationary = self.stationary()?;
        Ok(TrajectorySampler {
            space: self.space(),
            stationary: Categorical::new(stationary.iter().map(|&v| to_f64(v))),
            laws: self
                .factors
                .chunks(self.model.num_states())
                .map(|c| Categorical::new(c.iter().map(|&v| to_f64(v))))
                .collect(),
        })
    }
}

/// Inverse-CDF sampler for a finite law.
#[derive(Debug, Clone)]
pub(crate) struct Categorical {
    cdf: Vec<f64>,
    last_positive: usize,
}

impl Categorical {
    pub(crate) fn new(probs: impl IntoIterator<Item = f64>) -> Self {
        let mut acc = 0.0;
        let mut last_positive = 0;
        let cdf = probs
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                if p > 0.0 {
                    last_positive = i;
                }
                acc += p;
                acc
            })
            .collect();
        Self { cdf, last_positive }
    }

    pub(crate) fn sample(&self, rng: &mut Rng) -> usize {
        let u: f64 = rng.gen::<f64>() * self.cdf[self.cdf.len() - 1];
        self.cdf.partition_point(|&c| c <= u).min(self.last_positive)
    }
}

/// Where a sampled trajectory starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Initial {
    Stationary,
    Snapshot(Vec<usize>),
}

/// Precomputed sampling tables for a [`JointKernel`].
#[derive(Debug, Clone)]
pub struct TrajectorySampler {
    space: StateSpace,
    stationary: Categorical,
    laws: Vec<Categorical>,
}

impl TrajectorySampler {
    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn sample_stationary(&self, rng: &mut Rng) -> usize {
        self.stationary.sample(rng)
    }

    /// Draws the next joint snapshot index from source `a`.
    pub fn step(&self, a: usize, rng: &mut Rng) -> usize {
        let s = self.space.num_sequences();
        let m = self.space.num_states();
        (0..s).fold(0, |idx, j| idx * m + self.laws[a * s + j].sample(rng))
    }
}

/// Samples `horizon` joint snapshots; the first is the initial snapshot.
pub fn sample_trajectory<T: Scalar>(
    kernel: &JointKernel<T>,
    initial: &Initial,
    horizon: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if horizon < 1 {
        return Err(CsdpError::param("horizon", "must be at least 1"));
    }
    let space = kernel.space();
    let sampler = kernel.sampler_for(initial)?;
    let mut rng = rng_from_seed(seed);
    let mut current = match initial {
        Initial::Stationary => sampler.sample_stationary(&mut rng),
        Initial::Snapshot(snap) => {
            if snap.len() != space.num_sequences() {
                return Err(CsdpError::DimensionMismatch {
                    what: "initial snapshot".into(),
                    expected: space.num_sequences(),
                    got: snap.len(),
                });
            }
            if let Some((j, &v)) = snap.iter().enumerate().find(|(_, &v)| v >= space.num_states()) {
                return Err(CsdpError::param(
                    "initial",
                    format!("state {v} of sequence {} is outside 0..{}", j + 1, space.num_states()),
                ));
            }
            space.encode(snap)
        }
    };
    let mut out = Vec::with_capacity(horizon);
    out.push(space.decode(current));
    for _ in 1..horizon {
        current = sampler.step(current, &mut rng);
        out.push(space.decode(current));
    }
    Ok(out)
}

impl<T: Scalar> JointKernel<T> {
    // a start from a fixed snapshot must not require a stationary law
    fn sampler_for(&self, initial: &Initial) -> Result<TrajectorySampler> {
        match initial {
            Initial::Stationary => self.sampler(),
            Initial::Snapshot(_) => Ok(TrajectorySampler {
                space: self.space(),
                stationary: Categorical::new([1.0]),
                laws: self
                    .factors
                    .chunks(self.model.num_states())
                    .map(|c| Categorical::new(c.iter().map(|&v| to_f64(v))))
                    .collect(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmc::{evolve_distribution, CouplingWeights, TransitionMatrix};

    fn flip_single() -> CmcModel<f64> {
        CmcModel::<f64>::shared_transition(
            TransitionMatrix::<f64>::symmetric_flip(0.3).unwrap(),
            CouplingWeights::self_coupling(1, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_sequence_kernel_is_p() {
        let k = joint_kernel(&flip_single()).unwrap();
        let d = k.dense().unwrap();
        assert_eq!(d, flip_single().transition(0, 0).matrix().clone());
    }

    #[test]
    fn paper_kernel_column() {
        let k = joint_kernel(&CmcModel::<f64>::coupled_pair(0.3, 0.75).unwrap()).unwrap();
        let col = k.column(0);
        for (v, e) in col.iter().zip([0.49, 0.21, 0.21, 0.09]) {
            assert!((v - e).abs() < 1e-15);
        }
        for a in 0..4 {
            let sum: f64 = k.column(a).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!((k.entry(3, a) - k.column(a)[3]).abs() < 1e-15);
        }
    }

    #[test]
    fn marginal_step_matches_evolution() {
        let model = CmcModel::<f64>::coupled_pair(0.2, 0.65).unwrap();
        let k = joint_kernel(&model).unwrap();
        let pi = DistributionVector::<f64>::new(vec![vec![0.9, 0.1], vec![0.35, 0.65]]).unwrap();
        let joint = k.product_distribution(&pi).unwrap();
        let stepped = k.marginals(&k.apply(&joint));
        let evolved = evolve_distribution(&model, &pi).unwrap();
        for (a, b) in stepped.stacked().iter().zip(evolved.stacked()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cap_refusal() {
        let model = CmcModel::<f64>::coupled_pair(0.3, 0.5).unwrap();
        assert!(matches!(
            joint_kernel_with_cap(&model, 3),
            Err(CsdpError::CapExceeded { cap: 3, .. })
        ));
    }

    #[test]
    fn identity_kernel_trajectory_is_constant() {
        let model = CmcModel::<f64>::shared_transition(
            TransitionMatrix::<f64>::identity(2),
            CouplingWeights::self_coupling(1, 1.0).unwrap(),
        )
        .unwrap();
        let k = joint_kernel(&model).unwrap();
        let path = sample_trajectory(&k, &Initial::Snapshot(vec![1]), 50, 9).unwrap();
        assert!(path.iter().all(|x| x == &vec![1]));
    }

    #[test]
    fn trajectories_are_seeded() {
        let k = joint_kernel(&CmcModel::<f64>::coupled_pair(0.3, 0.75).unwrap()).unwrap();
        let a = sample_trajectory(&k, &Initial::Stationary, 200, 5).unwrap();
        let b = sample_trajectory(&k, &Initial::Stationary, 200, 5).unwrap();
        let c = sample_trajectory(&k, &Initial::Stationary, 200, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(sample_trajectory(&k, &Initial::Stationary, 0, 5).is_err());
    }
}
