//! Coupling Markov chain models: per-pair transition matrices mixed by
//! coupling weights, and the marginal evolution they induce.

use serde::{Deserialize, Serialize};

use super::space::StateSpace;
use crate::error::{CsdpError, Result};
use crate::linalg::Matrix;
use crate::scalar::{from_usize, short, Scalar};

/// One violated model invariant, located by its path in the model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Result of [`validate_model`]: empty when the model is valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first(&self) -> Option<&Violation> {
        self.violations.first()
    }

    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("pass");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Unvalidated model parts, as read from a model file.
///
/// `transitions[j][k]` is `P^(j+1,k+1)` given row-major; entry `[b][a]` is the
/// probability of next state `b` given source state `a`, so columns sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawModel<T> {
    pub num_sequences: usize,
    pub num_states: usize,
    pub transitions: Vec<Vec<Vec<Vec<T>>>>,
    pub lambda: Vec<Vec<T>>,
}

pub(crate) fn pair_label(j: usize, k: usize) -> String {
    if j < 9 && k < 9 {
        format!("P^({}{})", j + 1, k + 1)
    } else {
        format!("P^({},{})", j + 1, k + 1)
    }
}

/// Checks every structural and stochastic invariant of a raw model.
pub fn validate_model<T: Scalar>(raw: &RawModel<T>) -> ValidationReport {
    let mut report = ValidationReport::default();
    let tol = T::stochastic_tol();
    let (s, m) = (raw.num_sequences, raw.num_states);
    if s < 1 {
        report.push("num_sequences", "must be at least 1");
    }
    if m < 2 {
        report.push("num_states", "must be at least 2");
    }
    if raw.transitions.len() != s {
        report.push(
            "transitions",
            format!("expected {s} rows of matrices, found {}", raw.transitions.len()),
        );
    }
    for (j, row) in raw.transitions.iter().enumerate() {
        if row.len() != s {
            report.push(
                format!("transitions[{j}]"),
                format!("expected {s} matrices, found {}", row.len()),
            );
        }
        for (k, mat) in row.iter().enumerate() {
            let label = pair_label(j, k);
            let path = format!("transitions[{j}][{k}]");
            if mat.len() != m || mat.iter().any(|r| r.len() != m) {
                report.push(path, format!("{label} is not {m}x{m}"));
                continue;
            }
            for (b, r) in mat.iter().enumerate() {
                for (a, &v) in r.iter().enumerate() {
                    if !v.is_finite() || v < T::zero() || v > T::one() {
                        report.push(
                            format!("{path}[{b}][{a}]"),
                            format!("entry [{b},{a}] of {label} is {}, outside [0,1]", short(v)),
                        );
                    }
                }
            }
            for a in 0..m {
                let sum: T = mat.iter().map(|r| r[a]).sum();
                if (sum - T::one()).abs() > tol {
                    report.push(
                        path.clone(),
                        format!("column {a} of {label} sums to {}", short(sum)),
                    );
                }
            }
        }
    }
    if raw.lambda.len() != s || raw.lambda.iter().any(|r| r.len() != s) {
        report.push("lambda", format!("coupling weights are not {s}x{s}"));
    } else {
        for (j, row) in raw.lambda.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < T::zero() {
                    report.push(
                        format!("lambda[{j}][{k}]"),
                        format!("weight lambda_{}{} is {}, must be nonnegative", j + 1, k + 1, short(v)),
                    );
                }
            }
            let sum: T = row.iter().copied().sum();
            if (sum - T::one()).abs() > tol {
                report.push(
                    format!("lambda[{j}]"),
                    format!("row {j} of the coupling weights sums to {}", short(sum)),
                );
            }
        }
    }
    report
}

/// Column-stochastic `m x m` matrix: entry `(b, a)` is `Pr[next = b | source = a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<T>(Matrix<T>);

impl<T: Scalar> TransitionMatrix<T> {
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let raw = RawModel {
            num_sequences: 1,
            num_states: rows.len(),
            transitions: vec![vec![rows.to_vec()]],
            lambda: vec![vec![T::one()]],
        };
        let report = validate_model(&raw);
        if !report.is_valid() {
            return Err(CsdpError::InvalidModel(report));
        }
        Ok(Self(Matrix::from_rows(rows)?))
    }

    /// Two-state chain that flips away from the current state with probability `p`.
    pub fn symmetric_flip(p: T) -> Result<Self> {
        Self::from_rows(&[vec![T::one() - p, p], vec![p, T::one() - p]])
    }

    pub fn identity(m: usize) -> Self {
        Self(Matrix::identity(m))
    }

    pub fn num_states(&self) -> usize {
        self.0.rows()
    }

    #[inline]
    pub fn prob(&self, next: usize, source: usize) -> T {
        self.0[(next, source)]
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn is_irreducible(&self) -> bool {
        let m = self.num_states();
        crate::linalg::strongly_connected(m, |a, b| self.0[(b, a)] > T::zero())
    }
}

/// Row-stochastic `s x s` coupling weights `lambda_jk`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingWeights<T>(Matrix<T>);

impl<T: Scalar> CouplingWeights<T> {
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let s = rows.len();
        let raw = RawModel {
            num_sequences: s,
            num_states: 2,
            transitions: vec![vec![vec![vec![T::one(), T::zero()], vec![T::zero(), T::one()]]; s]; s],
            lambda: rows.to_vec(),
        };
        let report = validate_model(&raw);
        if !report.is_valid() {
            return Err(CsdpError::InvalidModel(report));
        }
        Ok(Self(Matrix::from_rows(rows)?))
    }

    /// Self weight `lambda` on the diagonal, the remainder split evenly.
    pub fn self_coupling(num_sequences: usize, lambda: T) -> Result<Self> {
        let s = num_sequences;
        let off = if s > 1 {
            (T::one() - lambda) / from_usize::<T>(s - 1)
        } else {
            T::zero()
        };
        let rows: Vec<Vec<T>> = (0..s)
            .map(|j| {
                (0..s)
                    .map(|k| if j == k { if s == 1 { T::one() } else { lambda } } else { off })
                    .collect()
            })
            .collect();
        Self::from_rows(&rows)
    }

    pub fn num_sequences(&self) -> usize {
        self.0.rows()
    }

    #[inline]
    pub fn weight(&self, j: usize, k: usize) -> T {
        self.0[(j, k)]
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn is_diagonal(&self) -> bool {
        let s = self.num_sequences();
        (0..s).all(|j| (0..s).all(|k| j == k || self.0[(j, k)] == T::zero()))
    }
}

/// A validated coupling Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct CmcModel<T> {
    space: StateSpace,
    transitions: Vec<TransitionMatrix<T>>,
    weights: CouplingWeights<T>,
}

impl<T: Scalar> CmcModel<T> {
    /// `transitions[j][k]` is `P^(jk)`.
    pub fn new(
        transitions: Vec<Vec<TransitionMatrix<T>>>,
        weights: CouplingWeights<T>,
    ) -> Result<Self> {
        let s = weights.num_sequences();
        let m = transitions
            .first()
            .and_then(|r| r.first())
            .map_or(0, TransitionMatrix::num_states);
        let space = StateSpace::new(s, m)?;
        if transitions.len() != s {
            return Err(CsdpError::DimensionMismatch {
                what: "rows of transition matrices".into(),
                expected: s,
                got: transitions.len(),
            });
        }
        let mut flat = Vec::with_capacity(s * s);
        for row in transitions {
            if row.len() != s {
                return Err(CsdpError::DimensionMismatch {
                    what: "transition matrices per row".into(),
                    expected: s,
                    got: row.len(),
                });
            }
            for p in row {
                if p.num_states() != m {
                    return Err(CsdpError::DimensionMismatch {
                        what: "transition matrix size".into(),
                        expected: m,
                        got: p.num_states(),
                    });
                }
                flat.push(p);
            }
        }
        Ok(Self {
            space,
            transitions: flat,
            weights,
        })
    }

    pub fn from_raw(raw: &RawModel<T>) -> Result<Self> {
        let report = validate_model(raw);
        if !report.is_valid() {
            return Err(CsdpError::InvalidModel(report));
        }
        let transitions = raw
            .transitions
            .iter()
            .map(|row| {
                row.iter()
                    .map(|rows| Matrix::from_rows(rows).map(TransitionMatrix))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let weights = CouplingWeights(Matrix::from_rows(&raw.lambda)?);
        Self::new(transitions, weights)
    }

    pub fn to_raw(&self) -> RawModel<T> {
        let s = self.space.num_sequences();
        RawModel {
            num_sequences: s,
            num_states: self.space.num_states(),
            transitions: (0..s)
                .map(|j| (0..s).map(|k| self.transition(j, k).matrix().to_rows()).collect())
                .collect(),
            lambda: self.weights.matrix().to_rows(),
        }
    }

    /// Every pair uses the same transition matrix.
    pub fn shared_transition(p: TransitionMatrix<T>, weights: CouplingWeights<T>) -> Result<Self> {
        let s = weights.num_sequences();
        Self::new(vec![vec![p; s]; s], weights)
    }

    /// Two binary sequences, every `P^(jk)` the symmetric flip-`p` chain,
    /// self coupling `lambda_11 = lambda_22 = lambda`.
    pub fn coupled_pair(flip: T, lambda: T) -> Result<Self> {
        Self::shared_transition(
            TransitionMatrix::symmetric_flip(flip)?,
            CouplingWeights::self_coupling(2, lambda)?,
        )
    }

    /// Same transitions, weights replaced by a self-coupling family member.
    pub fn with_self_coupling(&self, lambda: T) -> Result<Self> {
        Ok(Self {
            weights: CouplingWeights::self_coupling(self.space.num_sequences(), lambda)?,
            ..self.clone()
        })
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn num_sequences(&self) -> usize {
        self.space.num_sequences()
    }

    pub fn num_states(&self) -> usize {
        self.space.num_states()
    }

    /// `P^(jk)` (0-based `j`, `k`).
    pub fn transition(&self, j: usize, k: usize) -> &TransitionMatrix<T> {
        &self.transitions[j * self.space.num_sequences() + k]
    }

    pub fn weights(&self) -> &CouplingWeights<T> {
        &self.weights
    }

    /// Whether every transition matrix has identical columns, so the next
    /// snapshot does not depend on the current one.
    pub fn is_memoryless(&self) -> bool {
        let m = self.num_states();
        self.transitions.iter().all(|p| {
            (1..m).all(|a| (0..m).all(|b| (p.prob(b, a) - p.prob(b, 0)).abs() <= T::stochastic_tol()))
        })
    }
}

/// Per-sequence marginal distributions `pi^(1), …, pi^(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionVector<T> {
    num_states: usize,
    blocks: Vec<Vec<T>>,
}

impl<T: Scalar> DistributionVector<T> {
    pub fn new(blocks: Vec<Vec<T>>) -> Result<Self> {
        let m = blocks.first().map_or(0, Vec::len);
        let tol = T::stochastic_tol();
        for (j, b) in blocks.iter().enumerate() {
            if b.len() != m {
                return Err(CsdpError::DimensionMismatch {
                    what: format!("distribution block {j}"),
                    expected: m,
                    got: b.len(),
                });
            }
            let sum: T = b.iter().copied().sum();
            if b.iter().any(|&v| !(v >= T::zero())) || (sum - T::one()).abs() > tol {
                return Err(CsdpError::param(
                    "distribution",
                    format!("block {j} is not a probability vector (sum {sum})"),
                ));
            }
        }
        Ok(Self {
            num_states: m,
            blocks,
        })
    }

    pub fn from_stacked(stacked: &[T], num_states: usize) -> Result<Self> {
        if num_states == 0 || stacked.len() % num_states != 0 {
            return Err(CsdpError::DimensionMismatch {
                what: "stacked distribution length".into(),
                expected: num_states,
                got: stacked.len(),
            });
        }
        Self::new(stacked.chunks(num_states).map(<[T]>::to_vec).collect())
    }

    pub fn uniform(num_sequences: usize, num_states: usize) -> Self {
        let u = T::one() / from_usize::<T>(num_states);
        Self {
            num_states,
            blocks: vec![vec![u; num_states]; num_sequences],
        }
    }

    /// Every sequence in state `state` with certainty.
    pub fn point_mass(num_sequences: usize, num_states: usize, state: usize) -> Self {
        let mut b = vec![T::zero(); num_states];
        b[state] = T::one();
        Self {
            num_states,
            blocks: vec![b; num_sequences],
        }
    }

    pub fn blocks(&self) -> &[Vec<T>] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &[T] {
        &self.blocks[j]
    }

    pub fn stacked(&self) -> Vec<T> {
        self.blocks.concat()
    }

    pub fn num_sequences(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub(crate) fn from_blocks_unchecked(num_states: usize, blocks: Vec<Vec<T>>) -> Self {
        Self { num_states, blocks }
    }
}

/// The `(s·m) x (s·m)` block matrix `Q` with block `(j, k)` equal to `lambda_jk P^(jk)`.
pub fn build_block_matrix<T: Scalar>(model: &CmcModel<T>) -> Matrix<T> {
    let (s, m) = (model.num_sequences(), model.num_states());
    let mut q = Matrix::zeros(s * m, s * m);
    for j in 0..s {
        for k in 0..s {
            let w = model.weights().weight(j, k);
            let p = model.transition(j, k);
            for b in 0..m {
                for a in 0..m {
                    q[(j * m + b, k * m + a)] = w * p.prob(b, a);
                }
            }
        }
    }
    q
}

/// One step of the marginal evolution `pi^(j) <- sum_k lambda_jk P^(jk) pi^(k)`.
pub fn evolve_distribution<T: Scalar>(
    model: &CmcModel<T>,
    pi: &DistributionVector<T>,
) -> Result<DistributionVector<T>> {
    let (s, m) = (model.num_sequences(), model.num_states());
    if pi.num_sequences() != s || pi.num_states() != m {
        return Err(CsdpError::DimensionMismatch {
            what: "distribution vector length".into(),
            expected: s * m,
            got: pi.num_sequences() * pi.num_states(),
        });
    }
    let blocks = (0..s)
        .map(|j| {
            let mut out = vec![T::zero(); m];
            for k in 0..s {
                let w = model.weights().weight(j, k);
                if w == T::zero() {
                    continue;
                }
                let p = model.transition(j, k);
                for (b, o) in out.iter_mut().enumerate() {
                    let acc: T = (0..m).map(|a| p.prob(b, a) * pi.block(k)[a]).sum();
                    *o = *o + w * acc;
                }
            }
            out
        })
        .collect();
    Ok(DistributionVector::from_blocks_unchecked(m, blocks))
}
