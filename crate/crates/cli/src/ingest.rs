//! Domain CSV files: header `y,x1,...,xp`, one observation per row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;
use transma_core::{DMatrix, DVector, DomainData};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: u64, column: usize, message: String },

    #[error("{path}: header `{found}` does not match `{expected}`")]
    HeaderMismatch { path: PathBuf, expected: String, found: String },

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

fn expected_header(p: usize) -> String {
    std::iter::once("y".to_string()).chain((1..=p).map(|j| format!("x{j}"))).collect::<Vec<_>>().join(",")
}

/// Read one domain. Lines and columns in errors are 1-based, with the
/// header on line 1.
pub fn ingest_csv(path: &Path, id: usize) -> Result<DomainData, IngestError> {
    let io = |e: &dyn std::fmt::Display| IngestError::Io { path: path.to_path_buf(), message: e.to_string() };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| io(&e))?;
    let header = reader.headers().map_err(|e| io(&e))?.clone();
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    let p = found.len().saturating_sub(1);
    let expected = expected_header(p);
    if p == 0 || found.join(",") != expected {
        return Err(IngestError::HeaderMismatch {
            path: path.to_path_buf(),
            expected: if p == 0 { "y,x1,...,xp".into() } else { expected },
            found: found.join(","),
        });
    }

    let mut y = Vec::new();
    let mut x = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| io(&e))?;
        let line = record.position().map_or(0, |pos| pos.line());
        let parse_err = |column: usize, message: String| IngestError::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message,
        };
        if record.len() != p + 1 {
            // first missing or first extra field
            let column = if record.len() < p + 1 { record.len() + 1 } else { p + 2 };
            return Err(parse_err(column, format!("expected {} fields, found {}", p + 1, record.len())));
        }
        for (c, field) in record.iter().enumerate() {
            let text = field.trim();
            let value: f64 = text
                .parse()
                .map_err(|_| parse_err(c + 1, format!("cannot parse `{text}` as a number")))?;
            if !value.is_finite() {
                return Err(parse_err(c + 1, format!("non-finite value `{text}`")));
            }
            if c == 0 {
                y.push(value);
            } else {
                x.push(value);
            }
        }
    }
    let n = y.len();
    DomainData::new(id, DMatrix::from_row_slice(n, p, &x), DVector::from_vec(y)).map_err(|e| IngestError::Parse {
        path: path.to_path_buf(),
        line: 1,
        column: 1,
        message: e.to_string(),
    })
}

/// Write a domain in the format [`ingest_csv`] reads, with 17 significant
/// digits so values round-trip.
pub fn write_domain_csv(path: &Path, data: &DomainData) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", expected_header(data.p()))?;
    for i in 0..data.n() {
        write!(out, "{:.16e}", data.y()[i])?;
        for j in 0..data.p() {
            write!(out, ",{:.16e}", data.x()[(i, j)])?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Center `y` and every covariate, then scale covariates to unit variance
/// (divisor `n`). Each domain is standardized with its own moments.
pub fn standardize(data: &DomainData) -> transma_core::Result<DomainData> {
    let n = data.n() as f64;
    let mut x = data.x().clone();
    for j in 0..x.ncols() {
        let mut col = x.column_mut(j);
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / n).sqrt();
        if sd <= 1e-12 * (1.0 + mean.abs()) {
            return Err(transma_core::Error::InvalidInput(format!(
                "covariate x{} of domain {} is constant and cannot be standardized",
                j + 1,
                data.id()
            )));
        }
        col /= sd;
    }
    let mean_y = data.y().sum() / n;
    let y = data.y().add_scalar(-mean_y);
    DomainData::new(data.id(), x, y)
}
