//! Sequence databases and Phase-1 aging.
//!
//! Time indices in the API are 1-based (`t = 1..=T`); in CSV files row `r`
//! (0-based, after the header) holds time `r + 1`.

use std::io::{Read, Write};
use std::path::Path;

use crate::cmc::AoiVector;
use crate::error::{CsdpError, Result};

/// `T x s` array of states, one row per time step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceDatabase {
    num_states: usize,
    ids: Vec<String>,
    rows: Vec<Vec<usize>>,
}

impl SequenceDatabase {
    /// Sequence identifiers default to `seq1, seq2, …`.
    pub fn new(rows: Vec<Vec<usize>>, num_states: usize) -> Result<Self> {
        let s = rows.first().map_or(0, Vec::len);
        Self::with_ids(rows, num_states, (1..=s).map(|j| format!("seq{j}")).collect())
    }

    pub fn with_ids(rows: Vec<Vec<usize>>, num_states: usize, ids: Vec<String>) -> Result<Self> {
        if rows.is_empty() {
            return Err(CsdpError::param("database", "horizon must be at least 1"));
        }
        if num_states < 2 {
            return Err(CsdpError::param("num_states", "must be at least 2"));
        }
        let s = ids.len();
        if s == 0 {
            return Err(CsdpError::param("database", "needs at least one sequence"));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != s {
                return Err(CsdpError::DimensionMismatch {
                    what: format!("row for time {}", r + 1),
                    expected: s,
                    got: row.len(),
                });
            }
            if let Some((j, &v)) = row.iter().enumerate().find(|(_, &v)| v >= num_states) {
                return Err(CsdpError::StateOutOfRange {
                    t: r + 1,
                    sequence: j + 1,
                    value: v,
                    num_states,
                });
            }
        }
        Ok(Self {
            num_states,
            ids,
            rows,
        })
    }

    pub fn horizon(&self) -> usize {
        self.rows.len()
    }

    pub fn num_sequences(&self) -> usize {
        self.ids.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Snapshot at 1-based time `t`.
    pub fn snapshot(&self, t: usize) -> Result<&[usize]> {
        if t == 0 || t > self.horizon() {
            return Err(CsdpError::param("t", format!("time {t} outside 1..={}", self.horizon())));
        }
        Ok(&self.rows[t - 1])
    }

    pub fn read_csv(reader: impl Read, num_states: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let ids: Vec<String> = rdr
            .headers()
            .map_err(|e| CsdpError::Io(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| CsdpError::Io(e.to_string()))?;
            let row = rec
                .iter()
                .enumerate()
                .map(|(j, field)| {
                    field.parse::<usize>().map_err(|_| {
                        CsdpError::param("database", format!("row {r}, column {}: `{field}` is not a state", j + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::with_ids(rows, num_states, ids)
    }

    pub fn load_csv(path: &Path, num_states: usize) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| CsdpError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::read_csv(file, num_states).map_err(|e| CsdpError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| CsdpError::Io(e.to_string());
        w.write_record(&self.ids).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `(x^(1)_{t - A^(1)}, …, x^(s)_{t - A^(s)})` with 1-based `t`.
pub fn age_data(db: &SequenceDatabase, t: usize, age: &AoiVector) -> Result<Vec<usize>> {
    if age.len() != db.num_sequences() {
        return Err(CsdpError::DimensionMismatch {
            what: "AoI vector length".into(),
            expected: db.num_sequences(),
            got: age.len(),
        });
    }
    db.snapshot(t)?;
    age.ages()
        .iter()
        .enumerate()
        .map(|(j, &a)| {
            if a >= t {
                return Err(CsdpError::AgeExceedsHistory {
                    sequence: j + 1,
                    age: a,
                    t,
                });
            }
            Ok(db.rows[t - a - 1][j])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db() -> SequenceDatabase {
        SequenceDatabase::new(
            vec![vec![0, 1], vec![1, 1], vec![0, 0], vec![1, 0], vec![0, 1]],
            2,
        )
        .unwrap()
    }

    #[test]
    fn zero_age_is_current() {
        assert_eq!(age_data(&db(), 4, &AoiVector::zeros(2)).unwrap(), vec![1, 0]);
    }

    #[test]
    fn per_sequence_shift() {
        // x1 = (0,1,0,1,..): t=4, age (2,0) -> (x1_2, x2_4)
        assert_eq!(age_data(&db(), 4, &AoiVector::new(vec![2, 0])).unwrap(), vec![1, 0]);
    }

    #[test]
    fn too_old_names_sequence() {
        match age_data(&db(), 3, &AoiVector::new(vec![5, 5])) {
            Err(CsdpError::AgeExceedsHistory { sequence, .. }) => assert_eq!(sequence, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_roundtrip() {
        let mut buf = Vec::new();
        db().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("seq1,seq2\n0,1\n"));
        assert_eq!(SequenceDatabase::read_csv(buf.as_slice(), 2).unwrap(), db());
    }

    #[test]
    fn rejects_bad_states() {
        assert!(matches!(
            SequenceDatabase::new(vec![vec![0, 2]], 2),
            Err(CsdpError::StateOutOfRange { t: 1, sequence: 2, .. })
        ));
        assert!(SequenceDatabase::read_csv("a,b\n0,x\n".as_bytes(), 2).is_err());
        assert!(SequenceDatabase::new(vec![], 2).is_err());
    }
}
