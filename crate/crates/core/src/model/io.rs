//! Matrix and instance files.
//!
//! Matrices are headerless CSV, one row per line, decimal floats printed with
//! 17 significant digits so a write/read round trip is exact. An instance
//! fixture is a directory holding `A.csv`, `b.csv`, and `partition.json`
//! (`{"sizes":[...]}`).

use super::{BlockPartition, ModelError, ProblemInstance};
use crate::densenum::Matrix;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;

#[derive(Debug)]
pub enum IoError {
    /// Unparseable number, with 1-based line and column (field index).
    Parse {
        line: usize,
        column: usize,
        text: String,
    },
    /// Rows of differing lengths, or dimensions that do not fit together.
    Shape {
        line: usize,
        expected: usize,
        found: usize,
    },
    Model(ModelError),
    Io(std::io::Error),
}

impl fmt::Display for IoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IoError::Parse { line, column, text } => {
                write!(
                    f,
                    "line {line}, column {column}: cannot parse '{text}' as a number"
                )
            }
            IoError::Shape {
                line,
                expected,
                found,
            } => {
                write!(
                    f,
                    "line {line}: expected {expected} fields, found {found} (ragged rows)"
                )
            }
            IoError::Model(e) => write!(f, "{e}"),
            IoError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for IoError {}

impl From<std::io::Error> for IoError {
    fn from(e: std::io::Error) -> Self {
        IoError::Io(e)
    }
}

impl From<ModelError> for IoError {
    fn from(e: ModelError) -> Self {
        IoError::Model(e)
    }
}

/// Parse a headerless CSV matrix. Empty lines are ignored.
pub fn parse_matrix(text: &str) -> Result<Matrix, IoError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (li, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (ci, field) in line.split(',').enumerate() {
            let t = field.trim();
            let v: f64 = t.parse().map_err(|_| IoError::Parse {
                line: li + 1,
                column: ci + 1,
                text: t.to_string(),
            })?;
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(IoError::Shape {
                    line: li + 1,
                    expected: w,
                    found: row.len(),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    let r = rows.len();
    let c = width.unwrap_or(0);
    let mut data = Vec::with_capacity(r * c);
    for row in rows {
        data.extend(row);
    }
    Ok(Matrix::from_vec(r, c, data))
}

pub fn read_matrix(path: &Path) -> Result<Matrix, IoError> {
    parse_matrix(&fs::read_to_string(path)?)
}

/// Render a matrix as CSV with 17 significant digits per entry.
pub fn format_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<(), IoError> {
    let mut f = fs::File::create(path)?;
    f.write_all(format_matrix(m).as_bytes())?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct PartitionFile {
    sizes: Vec<usize>,
}

/// Read an instance fixture directory: `A.csv`, `b.csv`, `partition.json`.
pub fn read_instance(dir: &Path) -> Result<ProblemInstance, IoError> {
    let a = read_matrix(&dir.join("A.csv"))?;
    let b = read_matrix(&dir.join("b.csv"))?;
    let text = fs::read_to_string(dir.join("partition.json"))?;
    let pf: PartitionFile = serde_json::from_str(&text)
        .map_err(|e| IoError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
    let partition = BlockPartition::new(pf.sizes);
    Ok(ProblemInstance::new(a, b, partition)?)
}

/// Write an instance fixture directory.
pub fn write_instance(dir: &Path, inst: &ProblemInstance) -> Result<(), IoError> {
    fs::create_dir_all(dir)?;
    write_matrix(&dir.join("A.csv"), &inst.a)?;
    write_matrix(&dir.join("b.csv"), &inst.b)?;
    let pf = PartitionFile {
        sizes: inst.partition.sizes().to_vec(),
    };
    let mut f = fs::File::create(dir.join("partition.json"))?;
    f.write_all(serde_json::to_string(&pf).unwrap().as_bytes())?;
    Ok(())
}
