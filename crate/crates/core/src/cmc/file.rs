//! TOML model files.
//!
//! ```toml
//! format = "csdp-model/1"
//! orientation = "column-stochastic"
//! num_sequences = 2
//! num_states = 2
//! lambda = [[0.75, 0.25], [0.25, 0.75]]
//! # transitions[j][k] is P^(j+1,k+1), rows listed top to bottom
//! transitions = [
//!   [[[0.7, 0.3], [0.3, 0.7]], [[0.7, 0.3], [0.3, 0.7]]],
//!   [[[0.7, 0.3], [0.3, 0.7]], [[0.7, 0.3], [0.3, 0.7]]],
//! ]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{validate_model, CmcModel, RawModel};
use crate::error::{CsdpError, Result};
use crate::scalar::{lit, to_f64, Scalar};

pub const MODEL_FORMAT: &str = "csdp-model/1";
pub const ORIENTATION: &str = "column-stochastic";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    orientation: String,
    num_sequences: usize,
    num_states: usize,
    lambda: Vec<Vec<f64>>,
    transitions: Vec<Vec<Vec<Vec<f64>>>>,
}

/// Parses and validates a model document; `origin` names it in errors.
pub fn parse_model<T: Scalar>(text: &str, origin: &str) -> Result<CmcModel<T>> {
    let file_err = |message: String| CsdpError::File {
        path: origin.to_string(),
        message,
    };
    let doc: ModelFile = toml::from_str(text).map_err(|e| file_err(e.message().to_string()))?;
    if doc.format != MODEL_FORMAT {
        return Err(file_err(format!(
            "format: expected \"{MODEL_FORMAT}\", found \"{}\"",
            doc.format
        )));
    }
    if doc.orientation != ORIENTATION {
        return Err(file_err(format!(
            "orientation: expected \"{ORIENTATION}\", found \"{}\"",
            doc.orientation
        )));
    }
    let raw = RawModel::<T> {
        num_sequences: doc.num_sequences,
        num_states: doc.num_states,
        transitions: doc
            .transitions
            .iter()
            .map(|r| r.iter().map(|m| m.iter().map(|row| row.iter().map(|&v| lit(v)).collect()).collect()).collect())
            .collect(),
        lambda: doc.lambda.iter().map(|r| r.iter().map(|&v| lit(v)).collect()).collect(),
    };
    let report = validate_model(&raw);
    if let Some(first) = report.first() {
        return Err(file_err(first.to_string()));
    }
    CmcModel::from_raw(&raw)
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<CmcModel<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| CsdpError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_model(&text, &path.display().to_string())
}

/// Serializes a model to the file format.
pub fn model_to_toml<T: Scalar>(model: &CmcModel<T>) -> String {
    let raw = model.to_raw();
    let doc = ModelFile {
        format: MODEL_FORMAT.into(),
        orientation: ORIENTATION.into(),
        num_sequences: raw.num_sequences,
        num_states: raw.num_states,
        lambda: raw.lambda.iter().map(|r| r.iter().map(|&v| to_f64(v)).collect()).collect(),
        transitions: raw
            .transitions
            .iter()
            .map(|r| r.iter().map(|m| m.iter().map(|row| row.iter().map(|&v| to_f64(v)).collect()).collect()).collect())
            .collect(),
    };
    toml::to_string(&doc).expect("model documents always serialize")
}

pub fn save_model<T: Scalar>(model: &CmcModel<T>, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_toml(model)).map_err(|e| CsdpError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAPER: &str = r#"
format = "csdp-model/1"
orientation = "column-stochastic"
num_sequences = 2
num_states = 2
lambda = [[0.75, 0.25], [0.25, 0.75]]
transitions = [
  [[[0.7, 0.3], [0.3, 0.7]], [[0.7, 0.3], [0.3, 0.7]]],
  [[[0.7, 0.3], [0.3, 0.7]], [[0.7, 0.3], [0.3, 0.7]]],
]
"#;

    #[test]
    fn parses_paper_model() {
        let m: CmcModel<f64> = parse_model(PAPER, "paper.toml").unwrap();
        assert_eq!(m, CmcModel::<f64>::coupled_pair(0.3, 0.75).unwrap());
    }

    #[test]
    fn roundtrip() {
        let m = CmcModel::<f64>::coupled_pair(0.2, 0.6).unwrap();
        let back: CmcModel<f64> = parse_model(&model_to_toml(&m), "x").unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn first_violation_named_with_path() {
        let bad = PAPER.replacen("[[[0.7, 0.3], [0.3, 0.7]], [[0.7, 0.3]", "[[[0.6, 0.3], [0.3, 0.7]], [[0.7, 0.3]", 1);
        let err = parse_model::<f64>(&bad, "bad.toml").unwrap_err().to_string();
        assert!(err.contains("bad.toml"), "{err}");
        assert!(err.contains("transitions[0][0]: column 0 of P^(11) sums to 0.9"), "{err}");
    }

    #[test]
    fn orientation_required() {
        let bad = PAPER.replace("column-stochastic", "row-stochastic");
        let err = parse_model::<f64>(&bad, "m.toml").unwrap_err().to_string();
        assert!(err.contains("orientation"), "{err}");
    }
}
