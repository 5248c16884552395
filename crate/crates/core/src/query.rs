//! Queries over joint snapshots and their sensitivity profiles.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cmc::StateSpace;
use crate::error::{CsdpError, Result};
use crate::linalg::l1_distance;
use crate::scalar::{from_usize, Scalar};

type EvalFn<T> = dyn Fn(&[usize]) -> Vec<T> + Send + Sync;

/// The bundled aggregate queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinQuery {
    Mean,
    Sum,
    Max,
    Min,
}

impl BuiltinQuery {
    pub const ALL: [BuiltinQuery; 4] = [Self::Mean, Self::Sum, Self::Max, Self::Min];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::Sum => "sum",
            Self::Max => "max",
            Self::Min => "min",
        }
    }
}

impl fmt::Display for BuiltinQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinQuery {
    type Err = CsdpError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| CsdpError::param("query", format!("unknown query `{s}` (expected mean, sum, max or min)")))
    }
}

/// A query `f: X^s -> R^d` with its sensitivity profile `s_1(f), …, s_s(f)`,
/// where `s_i(f)` bounds the l1 change of `f` when `i` entries differ.
#[derive(Clone)]
pub struct QuerySpec<T> {
    name: String,
    space: StateSpace,
    output_dim: usize,
    eval: Arc<EvalFn<T>>,
    profile: Vec<T>,
}

impl<T> fmt::Debug for QuerySpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuerySpec")
            .field("name", &self.name)
            .field("space", &self.space)
            .field("output_dim", &self.output_dim)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> QuerySpec<T> {
    /// A user-supplied query. `profile[i - 1]` is `s_i(f)` for `i = 1..=s`.
    pub fn custom(
        name: impl Into<String>,
        space: StateSpace,
        output_dim: usize,
        eval: impl Fn(&[usize]) -> Vec<T> + Send + Sync + 'static,
        profile: Vec<T>,
    ) -> Result<Self> {
        let s = space.num_sequences();
        if profile.len() != s {
            return Err(CsdpError::DimensionMismatch {
                what: "sensitivity profile".into(),
                expected: s,
                got: profile.len(),
            });
        }
        if output_dim == 0 {
            return Err(CsdpError::param("output_dim", "must be at least 1"));
        }
        let s1 = profile[0];
        if !(s1 > T::zero()) {
            return Err(CsdpError::DegenerateQuery { query: name.into() });
        }
        for i in 1..s {
            if profile[i] < profile[i - 1] || profile[i] > from_usize::<T>(i + 1) * s1 * (T::one() + T::epsilon()) {
                return Err(CsdpError::param(
                    "profile",
                    format!("s_{} must lie in [s_{}, {}·s_1]", i + 1, i, i + 1),
                ));
            }
        }
        Ok(Self {
            name: name.into(),
            space,
            output_dim,
            eval: Arc::new(eval),
            profile,
        })
    }

    pub fn builtin(kind: BuiltinQuery, space: StateSpace) -> Self {
        let s = space.num_sequences();
        let range = from_usize::<T>(space.num_states() - 1);
        let count = from_usize::<T>(s);
        let profile: Vec<T> = (1..=s)
            .map(|i| {
                let i = from_usize::<T>(i);
                match kind {
                    BuiltinQuery::Mean => i * range / count,
                    BuiltinQuery::Sum => i * range,
                    BuiltinQuery::Max | BuiltinQuery::Min => range,
                }
            })
            .collect();
        let eval = move |x: &[usize]| -> Vec<T> {
            let v = match kind {
                BuiltinQuery::Mean => x.iter().map(|&v| from_usize::<T>(v)).sum::<T>() / count,
                BuiltinQuery::Sum => x.iter().map(|&v| from_usize::<T>(v)).sum(),
                BuiltinQuery::Max => from_usize(x.iter().copied().max().unwrap_or(0)),
                BuiltinQuery::Min => from_usize(x.iter().copied().min().unwrap_or(0)),
            };
            vec![v]
        };
        Self {
            name: kind.name().into(),
            space,
            output_dim: 1,
            eval: Arc::new(eval),
            profile,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn evaluate(&self, snapshot: &[usize]) -> Vec<T> {
        (self.eval)(snapshot)
    }

    /// `s_i(f)`; distances beyond `s` saturate at `s_s(f)`.
    pub fn sensitivity(&self, i: usize) -> Result<T> {
        if i == 0 {
            return Err(CsdpError::param("i", "sensitivity distance starts at 1"));
        }
        Ok(self.profile[(i - 1).min(self.profile.len() - 1)])
    }

    /// Global sensitivity `Δf = s_1(f)`.
    pub fn global_sensitivity(&self) -> T {
        self.profile[0]
    }

    pub fn profile(&self) -> &[T] {
        &self.profile
    }

    /// Scalar value of a one-dimensional query at every joint snapshot index.
    pub(crate) fn scalar_table(&self) -> Result<Vec<T>> {
        if self.output_dim != 1 {
            return Err(CsdpError::param(
                "query",
                format!("`{}` has {} outputs; a scalar query is required", self.name, self.output_dim),
            ));
        }
        let size = self.space.enumerable_size(usize::MAX)?;
        Ok((0..size).map(|x| self.evaluate(&self.space.decode(x))[0]).collect())
    }
}

/// Mean, sum, max and min over `space`.
pub fn builtin_queries<T: Scalar>(space: StateSpace) -> Vec<QuerySpec<T>> {
    BuiltinQuery::ALL
        .into_iter()
        .map(|q| QuerySpec::builtin(q, space))
        .collect()
}

/// Exhaustive `s_i(f)`, `i = 1..=s`, over all snapshot pairs at Hamming distance `i`.
pub fn brute_force_profile<T: Scalar>(query: &QuerySpec<T>, cap: usize) -> Result<Vec<T>> {
    let space = query.space();
    let size = space.enumerable_size(cap)?;
    let values: Vec<Vec<T>> = (0..size).map(|x| query.evaluate(&space.decode(x))).collect();
    let mut profile = vec![T::zero(); space.num_sequences()];
    for a in 0..size {
        for b in a + 1..size {
            let d = space.hamming(a, b);
            let change = l1_distance(&values[a], &values[b]);
            if change > profile[d - 1] {
                profile[d - 1] = change;
            }
        }
    }
    Ok(profile)
}

/// Correlation degree `k`: a record is correlated with at most `k - 1` others.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CorrelationDegree(usize);

impl CorrelationDegree {
    pub fn new(k: usize, num_sequences: usize) -> Result<Self> {
        if k < 1 || k > num_sequences {
            return Err(CsdpError::param(
                "k",
                format!("correlation degree {k} outside 1..={num_sequences}"),
            ));
        }
        Ok(Self(k))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(s: usize, m: usize) -> StateSpace {
        StateSpace::new(s, m).unwrap()
    }

    #[test]
    fn mean_profile_binary_pair() {
        let q = QuerySpec::<f64>::builtin(BuiltinQuery::Mean, space(2, 2));
        assert_eq!(q.profile(), &[0.5, 1.0]);
        assert_eq!(q.evaluate(&[1, 0]), vec![0.5]);
    }

    #[test]
    fn builtins_match_brute_force() {
        for s in 1..=3 {
            for m in 2..=4 {
                for q in builtin_queries::<f64>(space(s, m)) {
                    let brute = brute_force_profile(&q, 1 << 20).unwrap();
                    for (a, b) in q.profile().iter().zip(&brute) {
                        assert!((a - b).abs() < 1e-12, "{} s={s} m={m}", q.name());
                    }
                }
            }
        }
    }

    #[test]
    fn custom_profile_checked() {
        let sp = space(2, 2);
        let f = |x: &[usize]| vec![x[0] as f64];
        assert!(QuerySpec::custom("first", sp, 1, f, vec![1.0, 1.0]).is_ok());
        assert!(matches!(
            QuerySpec::custom("zero", sp, 1, |_: &[usize]| vec![0.0], vec![0.0, 0.0]),
            Err(CsdpError::DegenerateQuery { .. })
        ));
        assert!(QuerySpec::custom("bad", sp, 1, f, vec![1.0, 3.0]).is_err());
        assert!(QuerySpec::custom("short", sp, 1, f, vec![1.0]).is_err());
    }

    #[test]
    fn degree_range() {
        assert!(CorrelationDegree::new(0, 2).is_err());
        assert!(CorrelationDegree::new(3, 2).is_err());
        assert_eq!(CorrelationDegree::new(2, 2).unwrap().get(), 2);
    }

    #[test]
    fn names_parse() {
        for q in BuiltinQuery::ALL {
            assert_eq!(q.name().parse::<BuiltinQuery>().unwrap(), q);
        }
        assert!("median".parse::<BuiltinQuery>().is_err());
    }
}
