//! The two-phase release: age the snapshot, then add Laplace noise.

use std::fs::OpenOptions;
use std::path::Path;

use serde::Serialize;

use super::database::{age_data, SequenceDatabase};
use super::laplace::laplace_draw;
use crate::cmc::AoiVector;
use crate::error::{CsdpError, Result};
use crate::query::QuerySpec;
use crate::scalar::{to_f64, Scalar};
use crate::seeds::rng_from_seed;

/// Aging vector, noise level and query of one mechanism instance.
#[derive(Debug, Clone)]
pub struct FranConfig<T> {
    pub age: AoiVector,
    pub eps_c: T,
    pub query: QuerySpec<T>,
}

impl<T: Scalar> FranConfig<T> {
    pub fn new(age: AoiVector, eps_c: T, query: QuerySpec<T>) -> Result<Self> {
        if !(eps_c > T::zero()) || !eps_c.is_finite() {
            return Err(CsdpError::param("eps_c", "must be positive and finite"));
        }
        if age.len() != query.space().num_sequences() {
            return Err(CsdpError::DimensionMismatch {
                what: "AoI vector length".into(),
                expected: query.space().num_sequences(),
                got: age.len(),
            });
        }
        Ok(Self { age, eps_c, query })
    }

    /// Laplace scale `s_1(f) / ε_C`.
    pub fn noise_scale(&self) -> T {
        self.query.global_sensitivity() / self.eps_c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechanismOutput<T> {
    pub value: Vec<T>,
    pub aged_snapshot: Vec<usize>,
    pub noise_scale: T,
    pub seed: u64,
}

/// `f(aged snapshot) + Lap(s_1(f)/ε_C)` per output coordinate, at 1-based time `t`.
pub fn release<T: Scalar>(
    db: &SequenceDatabase,
    t: usize,
    age: &AoiVector,
    query: &QuerySpec<T>,
    eps_c: T,
    seed: u64,
) -> Result<MechanismOutput<T>> {
    let config = FranConfig::new(age.clone(), eps_c, query.clone())?;
    if db.num_states() != query.space().num_states() {
        return Err(CsdpError::DimensionMismatch {
            what: "states per sequence".into(),
            expected: query.space().num_states(),
            got: db.num_states(),
        });
    }
    let aged = age_data(db, t, age)?;
    let scale = config.noise_scale();
    let mut rng = rng_from_seed(seed);
    let value = query
        .evaluate(&aged)
        .into_iter()
        .map(|v| v + laplace_draw(&mut rng, scale))
        .collect();
    Ok(MechanismOutput {
        value,
        aged_snapshot: aged,
        noise_scale: scale,
        seed,
    })
}

/// One line of the release results log. `t` is the 0-based row index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRecord {
    pub t: usize,
    pub age: String,
    pub query: String,
    pub eps_c: f64,
    pub seed: u64,
    pub value: String,
}

impl LogRecord {
    pub fn new<T: Scalar>(t: usize, query: &QuerySpec<T>, eps_c: T, out: &MechanismOutput<T>, age: &AoiVector) -> Self {
        Self {
            t: t - 1,
            age: age.to_string(),
            query: query.name().to_string(),
            eps_c: to_f64(eps_c),
            seed: out.seed,
            value: out
                .value
                .iter()
                .map(|v| format!("{}", to_f64(*v)))
                .collect::<Vec<_>>()
                .join(";"),
        }
    }
}

/// Appends records, writing the header when the log is new or empty.
pub fn append_results_log(path: &Path, records: &[LogRecord]) -> Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CsdpError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in records {
        w.serialize(r).map_err(|e| CsdpError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmc::StateSpace;
    use crate::query::BuiltinQuery;

    fn mean() -> QuerySpec<f64> {
        QuerySpec::builtin(BuiltinQuery::Mean, StateSpace::new(2, 2).unwrap())
    }

    #[test]
    fn paper_release_is_reproducible() {
        let db = SequenceDatabase::new(vec![vec![1, 0]], 2).unwrap();
        let a = release(&db, 1, &AoiVector::zeros(2), &mean(), 1.0, 42).unwrap();
        let b = release(&db, 1, &AoiVector::zeros(2), &mean(), 1.0, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.noise_scale, 0.5);
        assert_eq!(a.aged_snapshot, vec![1, 0]);
        let mut rng = rng_from_seed(42);
        let expect = 0.5 + laplace_draw(&mut rng, 0.5);
        assert_eq!(a.value, vec![expect]);
    }

    #[test]
    fn huge_budget_is_nearly_exact() {
        let db = SequenceDatabase::new(vec![vec![1, 1], vec![0, 1]], 2).unwrap();
        let out = release(&db, 2, &AoiVector::zeros(2), &mean(), 1e6, 3).unwrap();
        assert!((out.value[0] - 0.5).abs() < 1e-4);
    }

    #[test]
    fn results_log_appends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        let db = SequenceDatabase::new(vec![vec![1, 0], vec![1, 1]], 2).unwrap();
        let age = AoiVector::new(vec![1, 0]);
        for seed in [1, 2] {
            let out = release(&db, 2, &age, &mean(), 2.0, seed).unwrap();
            append_results_log(&path, &[LogRecord::new(2, &mean(), 2.0, &out, &age)]).unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,age,query,eps_c,seed,value");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,1;0,mean,2.0,1,"));
    }
}
