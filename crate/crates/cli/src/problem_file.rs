//! Problem files: JSON with row-major 2-D arrays under `p_xy`, optional
//! `distortion` and `metric` (Hamming when absent), and optional `name` and
//! `seed` metadata.

use std::fs;
use std::path::{Path, PathBuf};

use dp_core::instance::RandomInstance;
use dp_core::{DistortionMatrix, DpError, GroundMetric, JointChannel, Matrix, Problem, Tolerances};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::json;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{origin}: line {line}, column {column}: {message}")]
    Syntax {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{field}: {message}")]
    Field { field: &'static str, message: String },

    #[error(transparent)]
    Problem(#[from] DpError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub p_xy: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distortion: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
}

/// Rows of equal length, named by field and row index when they are not.
fn matrix(field: &'static str, rows: &[Vec<f64>]) -> Result<Matrix, InputError> {
    let first = rows.first().ok_or_else(|| InputError::Field { field, message: "matrix has no rows".into() })?;
    if first.is_empty() {
        return Err(InputError::Field { field, message: "row 0 is empty".into() });
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != first.len() {
            return Err(InputError::Field {
                field,
                message: format!("row {i} has {} entries, expected {} (the length of row 0)", row.len(), first.len()),
            });
        }
    }
    Ok(Matrix::from_rows(rows)?)
}

fn square(field: &'static str, rows: &[Vec<f64>], n: usize) -> Result<Matrix, InputError> {
    let m = matrix(field, rows)?;
    if m.shape() != (n, n) {
        return Err(InputError::Field {
            field,
            message: format!("expected {n}x{n} to match the rows of p_xy, got {}x{}", m.rows(), m.cols()),
        });
    }
    Ok(m)
}

impl ProblemFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self, InputError> {
        serde_json::from_str(text).map_err(|e| InputError::Syntax {
            origin: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, InputError> {
        let text = fs::read_to_string(path).map_err(|source| InputError::Io { path: path.into(), source })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        json::to_string(self)
    }

    pub fn save(&self, path: &Path) -> Result<(), InputError> {
        fs::write(path, self.to_json()).map_err(|source| InputError::Io { path: path.into(), source })
    }

    pub fn problem(&self) -> Result<Problem, InputError> {
        self.problem_with(Tolerances::default())
    }

    pub fn problem_with(&self, tol: Tolerances) -> Result<Problem, InputError> {
        let p_xy = matrix("p_xy", &self.p_xy)?;
        let n = p_xy.rows();
        let channel = JointChannel::with_tolerances(p_xy, &tol)?;
        let distortion = match &self.distortion {
            Some(rows) => DistortionMatrix::new(square("distortion", rows, n)?)?,
            None => DistortionMatrix::hamming(n),
        };
        let metric = match &self.metric {
            Some(rows) => GroundMetric::with_tolerances(square("metric", rows, n)?, &tol)?,
            None => GroundMetric::hamming(n),
        };
        Ok(Problem::with_tolerances(channel, distortion, metric, tol)?)
    }

    pub fn from_instance(instance: &RandomInstance, seed: u64) -> Self {
        let (n_x, n_y) = instance.p_xy.shape();
        Self {
            name: Some(format!("random-{n_x}x{n_y}-seed-{seed}")),
            seed: Some(seed),
            p_xy: instance.p_xy.to_rows(),
            distortion: instance.distortion.as_ref().map(Matrix::to_rows),
            metric: None,
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("{}x{} instance", self.p_xy.len(), self.p_xy[0].len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<ProblemFile, InputError> {
        ProblemFile::parse(s, "test")
    }

    #[test]
    fn defaults_to_hamming() {
        let f = parse(r#"{"p_xy": [[0.54, 0.06], [0.04, 0.36]]}"#).unwrap();
        let p = f.problem().unwrap();
        assert!(p.metric().is_hamming());
        assert_eq!(p.distortion(), &DistortionMatrix::hamming(2));
    }

    #[test]
    fn ragged_rows_name_the_row() {
        let f = parse(r#"{"p_xy": [[0.5, 0.0], [0.25, 0.125, 0.125]]}"#).unwrap();
        let msg = f.problem().unwrap_err().to_string();
        assert!(msg.starts_with("p_xy: row 1 has 3 entries"), "{msg}");
    }

    #[test]
    fn distortion_shape_checked() {
        let f = parse(r#"{"p_xy": [[0.5, 0.5]], "distortion": [[0.0, 1.0]]}"#).unwrap();
        let msg = f.problem().unwrap_err().to_string();
        assert!(msg.starts_with("distortion: expected 1x1"), "{msg}");
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse("{\n  \"p_xy\": [[0.5,, 0.5]]\n}").unwrap_err();
        assert!(matches!(err, InputError::Syntax { line: 2, .. }), "{err}");
    }

    #[test]
    fn unknown_field_rejected() {
        let err = parse(r#"{"p_xy": [[1.0]], "pxy": 1}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field `pxy`"), "{err}");
    }

    #[test]
    fn optional_fields_omitted() {
        let f = parse(r#"{"p_xy": [[0.5, 0.5]]}"#).unwrap();
        assert_eq!(f.to_json(), "{\n  \"p_xy\": [\n    [\n      0.5,\n      0.5\n    ]\n  ]\n}\n");
    }
}
