use serde::{Deserialize, Serialize};

use crate::error::{CsdpError, Result};

/// Default upper bound on `m^s` for exact enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// `s` categorical sequences over the alphabet `{0, …, m-1}`.
///
/// Joint snapshots are indexed in mixed radix with sequence 0 as the most
/// significant digit, so for `s = m = 2` the order is `(0,0), (0,1), (1,0), (1,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateSpace {
    num_sequences: usize,
    num_states: usize,
}

impl StateSpace {
    pub fn new(num_sequences: usize, num_states: usize) -> Result<Self> {
        if num_sequences < 1 {
            return Err(CsdpError::param("num_sequences", "must be at least 1"));
        }
        if num_states < 2 {
            return Err(CsdpError::param("num_states", "must be at least 2"));
        }
        Ok(Self {
            num_sequences,
            num_states,
        })
    }

    pub fn num_sequences(&self) -> usize {
        self.num_sequences
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// `m^s`, or `None` on overflow.
    pub fn size(&self) -> Option<usize> {
        let exp = u32::try_from(self.num_sequences).ok()?;
        self.num_states.checked_pow(exp)
    }

    /// `m^s` if it does not exceed `cap`.
    pub fn enumerable_size(&self, cap: usize) -> Result<usize> {
        match self.size() {
            Some(n) if n <= cap => Ok(n),
            other => Err(CsdpError::CapExceeded {
                num_states: self.num_states,
                num_sequences: self.num_sequences,
                size: other.map_or_else(|| "overflow".to_string(), |n| n.to_string()),
                cap,
            }),
        }
    }

    pub fn encode(&self, snapshot: &[usize]) -> usize {
        debug_assert_eq!(snapshot.len(), self.num_sequences);
        snapshot
            .iter()
            .fold(0, |acc, &x| acc * self.num_states + x)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.num_sequences];
        for slot in out.iter_mut().rev() {
            *slot = index % self.num_states;
            index /= self.num_states;
        }
        out
    }

    /// State of sequence `seq` inside the joint index.
    pub fn digit(&self, index: usize, seq: usize) -> usize {
        let shift = self.num_sequences - 1 - seq;
        (index / self.num_states.pow(shift as u32)) % self.num_states
    }

    /// Joint index with sequence `seq` replaced by `value`.
    pub fn with_digit(&self, index: usize, seq: usize, value: usize) -> usize {
        let place = self.num_states.pow((self.num_sequences - 1 - seq) as u32);
        let old = (index / place) % self.num_states;
        index - old * place + value * place
    }

    /// Number of positions at which two joint indices differ.
    pub fn hamming(&self, a: usize, b: usize) -> usize {
        (0..self.num_sequences)
            .filter(|&j| self.digit(a, j) != self.digit(b, j))
            .count()
    }
}

/// Age-of-information vector: the per-sequence lag of the published snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AoiVector(Vec<usize>);

impl AoiVector {
    pub fn new(ages: Vec<usize>) -> Self {
        Self(ages)
    }

    pub fn uniform(num_sequences: usize, age: usize) -> Self {
        Self(vec![age; num_sequences])
    }

    pub fn zeros(num_sequences: usize) -> Self {
        Self::uniform(num_sequences, 0)
    }

    pub fn ages(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_age(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// The common age when every sequence has the same lag.
    pub fn uniform_age(&self) -> Option<usize> {
        let first = *self.0.first()?;
        self.0.iter().all(|&a| a == first).then_some(first)
    }

    pub(crate) fn check_len(&self, space: &StateSpace) -> Result<()> {
        if self.0.len() != space.num_sequences() {
            return Err(CsdpError::DimensionMismatch {
                what: "AoI vector length".into(),
                expected: space.num_sequences(),
                got: self.0.len(),
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for AoiVector {
    /// Ages joined by `;`, e.g. `2;0`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(";"))
    }
}

impl From<Vec<usize>> for AoiVector {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_spaces() {
        assert!(StateSpace::new(0, 2).is_err());
        assert!(StateSpace::new(2, 1).is_err());
    }

    #[test]
    fn encode_decode_order() {
        let sp = StateSpace::new(2, 2).unwrap();
        let order: Vec<Vec<usize>> = (0..4).map(|i| sp.decode(i)).collect();
        assert_eq!(order, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        let sp = StateSpace::new(3, 4).unwrap();
        for i in 0..64 {
            assert_eq!(sp.encode(&sp.decode(i)), i);
            for j in 0..3 {
                assert_eq!(sp.digit(i, j), sp.decode(i)[j]);
                let moved = sp.with_digit(i, j, 3);
                let mut expect = sp.decode(i);
                expect[j] = 3;
                assert_eq!(sp.decode(moved), expect);
            }
        }
    }

    #[test]
    fn cap_and_overflow() {
        let sp = StateSpace::new(40, 10).unwrap();
        assert!(sp.size().is_none());
        assert!(matches!(
            sp.enumerable_size(DEFAULT_ENUMERATION_CAP),
            Err(CsdpError::CapExceeded { .. })
        ));
        let sp = StateSpace::new(6, 10).unwrap();
        assert_eq!(sp.enumerable_size(DEFAULT_ENUMERATION_CAP).unwrap(), 1_000_000);
        assert!(sp.enumerable_size(999_999).is_err());
    }

    #[test]
    fn aoi_display() {
        assert_eq!(AoiVector::new(vec![2, 0]).to_string(), "2;0");
        assert_eq!(AoiVector::uniform(3, 4).uniform_age(), Some(4));
        assert_eq!(AoiVector::new(vec![1, 2]).uniform_age(), None);
    }
}
