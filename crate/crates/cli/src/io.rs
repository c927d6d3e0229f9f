//! JSON problem files.
//!
//! ```json
//! {
//!   "n": 1,
//!   "objective": {"P": [[0, 0, 1]], "q": [0], "r": 0},
//!   "constraints": [{"P": [[0, 0, 1]], "q": [0], "r": -1, "sense": "eq"}]
//! }
//! ```
//!
//! `P` lists the upper triangle as `[row, col, value]` triplets with 0-based
//! indices; an off-diagonal triplet stands for both symmetric entries. `q`
//! defaults to zeros, `r` to zero and `sense` to `"leq"` (`f(x) ≤ 0`).

use std::path::Path;

use qcqp::{Constraint, QcqpProblem, QuadraticForm, Sense};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormFile {
    #[serde(rename = "P", default)]
    pub p: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default)]
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintFile {
    #[serde(rename = "P", default)]
    pub p: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default)]
    pub r: f64,
    #[serde(default = "leq")]
    pub sense: String,
}

impl ConstraintFile {
    fn form(&self) -> FormFile {
        FormFile {
            p: self.p.clone(),
            q: self.q.clone(),
            r: self.r,
        }
    }
}

fn leq() -> String {
    "leq".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub objective: FormFile,
    #[serde(default)]
    pub constraints: Vec<ConstraintFile>,
}

fn field_err(field: &str, message: impl ToString) -> ParseError {
    ParseError::Field {
        field: field.into(),
        message: message.to_string(),
    }
}

impl FormFile {
    fn to_form(&self, n: usize, field: &str) -> Result<QuadraticForm, ParseError> {
        let q = self.q.clone().unwrap_or_else(|| vec![0.0; n]);
        QuadraticForm::new(n, self.p.clone(), q, self.r).map_err(|e| field_err(field, e))
    }

    fn from_form(f: &QuadraticForm) -> Self {
        FormFile {
            p: f.triplets().to_vec(),
            q: Some(f.q().to_vec()),
            r: f.r(),
        }
    }
}

impl ProblemFile {
    pub fn to_problem(&self) -> Result<QcqpProblem, ParseError> {
        let objective = self.objective.to_form(self.n, "objective")?;
        let mut constraints = Vec::with_capacity(self.constraints.len());
        for (i, c) in self.constraints.iter().enumerate() {
            let field = format!("constraints[{i}]");
            let form = c.form().to_form(self.n, &field)?;
            let sense = match c.sense.as_str() {
                "leq" | "<=" => Sense::LeqZero,
                "eq" | "==" => Sense::EqZero,
                other => {
                    return Err(field_err(
                        &format!("{field}.sense"),
                        format!("unknown sense {other:?}; expected \"leq\" or \"eq\""),
                    ))
                }
            };
            constraints.push(Constraint { form, sense });
        }
        QcqpProblem::new(objective, constraints).map_err(|e| field_err("problem", e))
    }

    pub fn from_problem(problem: &QcqpProblem) -> Self {
        ProblemFile {
            n: problem.dim(),
            objective: FormFile::from_form(problem.objective()),
            constraints: problem
                .constraints()
                .iter()
                .map(|c| ConstraintFile {
                    p: c.form.triplets().to_vec(),
                    q: Some(c.form.q().to_vec()),
                    r: c.form.r(),
                    sense: match c.sense {
                        Sense::LeqZero => "leq".into(),
                        Sense::EqZero => "eq".into(),
                    },
                })
                .collect(),
        }
    }
}

pub fn parse_problem(text: &str) -> Result<QcqpProblem, ParseError> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| ParseError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.to_problem()
}

pub fn problem_to_json(problem: &QcqpProblem) -> String {
    serde_json::to_string_pretty(&ProblemFile::from_problem(problem)).expect("problem files serialize")
}

pub fn load_problem(path: &Path) -> Result<QcqpProblem, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_problem(&text)
}

pub fn save_problem(problem: &QcqpProblem, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, problem_to_json(problem) + "\n")
}
