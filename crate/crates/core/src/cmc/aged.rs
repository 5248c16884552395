//! Stationary joint law of the current snapshot and the aged snapshot.
//!
//! The chain is started at stationarity. For ages `A`, the aged snapshot `z`
//! holds sequence `j`'s state `A_j` steps before the current snapshot `x`.

use super::kernel::JointKernel;
use super::space::{AoiVector, StateSpace};
use crate::error::{CsdpError, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Joint probabilities `J[z][x] = Pr[aged = z, current = x]`.
#[derive(Debug, Clone)]
pub struct AgedJointLaw<T> {
    space: StateSpace,
    ages: AoiVector,
    table: Matrix<T>,
    current: Vec<T>,
}

pub fn aged_joint_law<T: Scalar>(kernel: &JointKernel<T>, ages: &AoiVector) -> Result<AgedJointLaw<T>> {
    let space = kernel.space();
    ages.check_len(&space)?;
    kernel.check_table()?;
    let pi = kernel.stationary()?;
    let n = kernel.size();
    let table = match ages.uniform_age() {
        Some(0) => {
            let mut t = Matrix::zeros(n, n);
            for (x, &p) in pi.iter().enumerate() {
                t[(x, x)] = p;
            }
            t
        }
        Some(age) => {
            let kt = kernel.dense()?.pow(age);
            let mut t = Matrix::zeros(n, n);
            for z in 0..n {
                for x in 0..n {
                    t[(z, x)] = pi[z] * kt[(x, z)];
                }
            }
            t
        }
        None => heterogeneous_table(kernel, pi, ages)?,
    };
    let current = (0..n).map(|x| (0..n).map(|z| table[(z, x)]).sum()).collect();
    Ok(AgedJointLaw {
        space,
        ages: ages.clone(),
        table,
        current,
    })
}

// Walks a stationary path for max-age steps. W[z][y] tracks the partially
// recorded aged snapshot z against the path's present state y; sequence j is
// recorded when the path is A_j steps short of its end.
fn heterogeneous_table<T: Scalar>(
    kernel: &JointKernel<T>,
    pi: &[T],
    ages: &AoiVector,
) -> Result<Matrix<T>> {
    let space = kernel.space();
    let n = kernel.size();
    let horizon = ages.max_age();
    let record = |w: &Matrix<T>, remaining: usize| -> Option<Matrix<T>> {
        let seqs: Vec<usize> = (0..ages.len()).filter(|&j| ages.ages()[j] == remaining).collect();
        if seqs.is_empty() {
            return None;
        }
        let mut out = Matrix::zeros(n, n);
        for z in 0..n {
            for y in 0..n {
                let v = w[(z, y)];
                if v == T::zero() {
                    continue;
                }
                let target = seqs
                    .iter()
                    .fold(z, |acc, &j| space.with_digit(acc, j, space.digit(y, j)));
                out[(target, y)] = out[(target, y)] + v;
            }
        }
        Some(out)
    };
    let mut w = Matrix::zeros(n, n);
    for (y, &p) in pi.iter().enumerate() {
        w[(0, y)] = p;
    }
    if let Some(r) = record(&w, horizon) {
        w = r;
    }
    let kt = kernel.dense()?.transpose();
    for step in 1..=horizon {
        w = w.matmul(&kt);
        if let Some(r) = record(&w, horizon - step) {
            w = r;
        }
    }
    Ok(w)
}

impl<T: Scalar> AgedJointLaw<T> {
    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn ages(&self) -> &AoiVector {
        &self.ages
    }

    pub fn size(&self) -> usize {
        self.current.len()
    }

    /// `Pr[aged = z, current = x]`.
    #[inline]
    pub fn joint(&self, z: usize, x: usize) -> T {
        self.table[(z, x)]
    }

    /// Stationary `Pr[current = x]`.
    pub fn current(&self, x: usize) -> T {
        self.current[x]
    }

    /// `Pr[aged = z | current = x]` for every `x`.
    pub fn conditional(&self) -> Result<ConditionalTable<T>> {
        let n = self.size();
        if let Some(x) = (0..n).find(|&x| !(self.current[x] > T::zero())) {
            return Err(CsdpError::ZeroProbabilityState {
                state: self.space.decode(x),
            });
        }
        let mut t = Matrix::zeros(n, n);
        for x in 0..n {
            let px = self.current[x];
            for z in 0..n {
                t[(z, x)] = self.table[(z, x)] / px;
            }
        }
        Ok(ConditionalTable {
            space: self.space,
            table: t,
        })
    }
}

/// Column `x` is the law of the aged snapshot given current snapshot `x`.
#[derive(Debug, Clone)]
pub struct ConditionalTable<T> {
    space: StateSpace,
    table: Matrix<T>,
}

impl<T: Scalar> ConditionalTable<T> {
    pub fn space(&self) -> StateSpace {
        self.space
    }

    /// `Pr[aged = z | current = x]`.
    #[inline]
    pub fn prob(&self, z: usize, x: usize) -> T {
        self.table[(z, x)]
    }

    pub fn column(&self, x: usize) -> Vec<T> {
        self.table.column(x)
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.table
    }
}

/// `Pr[aged snapshot | current snapshot]` at stationarity.
pub fn backward_conditional<T: Scalar>(
    kernel: &JointKernel<T>,
    age: &AoiVector,
) -> Result<ConditionalTable<T>> {
    aged_joint_law(kernel, age)?.conditional()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmc::{joint_kernel, CmcModel, CouplingWeights, TransitionMatrix};

    fn flip_single() -> JointKernel<f64> {
        joint_kernel(
            &CmcModel::<f64>::shared_transition(
                TransitionMatrix::<f64>::symmetric_flip(0.3).unwrap(),
                CouplingWeights::self_coupling(1, 1.0).unwrap(),
            )
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn age_zero_is_identity() {
        let k = joint_kernel(&CmcModel::<f64>::coupled_pair(0.3, 0.75).unwrap()).unwrap();
        let c = backward_conditional(&k, &AoiVector::zeros(2)).unwrap();
        for z in 0..4 {
            for x in 0..4 {
                assert_eq!(c.prob(z, x), if z == x { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn flip_chain_lagged_agreement() {
        let k = flip_single();
        for t in 1..8 {
            let c = backward_conditional(&k, &AoiVector::uniform(1, t)).unwrap();
            let expect = (1.0 + 0.4f64.powi(t as i32)) / 2.0;
            assert!((c.prob(0, 0) - expect).abs() < 1e-12, "t={t}");
            assert!((c.prob(1, 1) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn heterogeneous_matches_uniform_when_equal() {
        // ages (2, 2) via the uniform path against a forced walk
        let k = joint_kernel(&CmcModel::<f64>::coupled_pair(0.3, 0.7).unwrap()).unwrap();
        let pi = k.stationary().unwrap().to_vec();
        let walked = heterogeneous_table(&k, &pi, &AoiVector::new(vec![2, 2])).unwrap();
        let fast = aged_joint_law(&k, &AoiVector::uniform(2, 2)).unwrap();
        for z in 0..4 {
            for x in 0..4 {
                assert!((walked[(z, x)] - fast.joint(z, x)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn heterogeneous_columns_are_laws() {
        let k = joint_kernel(&CmcModel::<f64>::coupled_pair(0.3, 0.75).unwrap()).unwrap();
        let c = backward_conditional(&k, &AoiVector::new(vec![3, 1])).unwrap();
        for x in 0..4 {
            let s: f64 = c.column(x).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_length_rejected() {
        let k = flip_single();
        assert!(backward_conditional(&k, &AoiVector::zeros(2)).is_err());
    }
}
