//! Paired `(x, y)` observations with per-entry missingness.
//!
//! A missing entry is `None`, never a sentinel number, so nothing downstream
//! can average it in by accident.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Token that reads as a missing entry, in addition to an empty cell.
pub const MISSING_TOKEN: &str = "NaN";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<Option<f64>>,
    y: Vec<Option<f64>>,
    x_name: String,
    y_name: String,
}

/// Row and missing-value counts, echoed in run reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Digest {
    pub rows: usize,
    pub missing_x: usize,
    pub missing_y: usize,
}

impl Dataset {
    /// Builds a dataset, checking equal lengths, finiteness of present
    /// entries and that at least one row exists.
    pub fn new(x: Vec<Option<f64>>, y: Vec<Option<f64>>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                x: x.len(),
                y: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::EmptyFile);
        }
        for (i, v) in x.iter().chain(y.iter()).enumerate() {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("entry {} is {v}", i % x.len())));
                }
            }
        }
        Ok(Self {
            x,
            y,
            x_name: "x".into(),
            y_name: "y".into(),
        })
    }

    /// Complete dataset from plain slices.
    pub fn from_xy(x: &[f64], y: &[f64]) -> Result<Self> {
        Self::new(
            x.iter().copied().map(Some).collect(),
            y.iter().copied().map(Some).collect(),
        )
    }

    pub fn with_names(mut self, x_name: impl Into<String>, y_name: impl Into<String>) -> Self {
        self.x_name = x_name.into();
        self.y_name = y_name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[Option<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[Option<f64>] {
        &self.y
    }

    pub fn x_name(&self) -> &str {
        &self.x_name
    }

    pub fn y_name(&self) -> &str {
        &self.y_name
    }

    pub fn is_complete(&self) -> bool {
        self.x.iter().chain(self.y.iter()).all(Option::is_some)
    }

    pub fn digest(&self) -> Digest {
        Digest {
            rows: self.len(),
            missing_x: self.x.iter().filter(|v| v.is_none()).count(),
            missing_y: self.y.iter().filter(|v| v.is_none()).count(),
        }
    }

    /// Plain `(x, y)` vectors of a complete dataset.
    pub fn xy(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let x: Option<Vec<f64>> = self.x.iter().copied().collect();
        let y: Option<Vec<f64>> = self.y.iter().copied().collect();
        match (x, y) {
            (Some(x), Some(y)) => Ok((x, y)),
            _ => Err(Error::Incomplete),
        }
    }

    /// Rows where both `x` and `y` are present, in their original order.
    pub fn complete_pairs(&self) -> Result<Dataset> {
        let (x, y): (Vec<_>, Vec<_>) = self
            .x
            .iter()
            .zip(&self.y)
            .filter(|(x, y)| x.is_some() && y.is_some())
            .map(|(x, y)| (*x, *y))
            .unzip();
        if x.is_empty() {
            return Err(Error::AllMissing);
        }
        Ok(Dataset {
            x,
            y,
            x_name: self.x_name.clone(),
            y_name: self.y_name.clone(),
        })
    }

    pub fn load_csv(path: impl AsRef<Path>, x_col: &str, y_col: &str) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file, x_col, y_col)
    }

    pub fn read_csv<R: Read>(reader: R, x_col: &str, y_col: &str) -> Result<Self> {
        let mut cols = read_columns(reader, &[x_col, y_col])?;
        let y = cols.pop().unwrap_or_default();
        let x = cols.pop().unwrap_or_default();
        Ok(Self::new(x, y)?.with_names(x_col, y_col))
    }

    /// Writes a two-column CSV; missing entries become empty cells and
    /// present values use the shortest round-tripping decimal form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([self.x_name.as_str(), self.y_name.as_str()])
            .map_err(csv_err)?;
        for (x, y) in self.x.iter().zip(&self.y) {
            w.write_record([format_cell(*x), format_cell(*y)])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads the named columns of a CSV with a header row, in the order given.
pub fn read_columns<R: Read>(reader: R, names: &[&str]) -> Result<Vec<Vec<Option<f64>>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let idx = names
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cols = vec![Vec::new(); names.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        for ((col, &i), name) in cols.iter_mut().zip(&idx).zip(names) {
            col.push(parse_cell(record.get(i).unwrap_or(""), row + 1, name)?);
        }
    }
    if cols.first().is_none_or(|c| c.is_empty()) {
        return Err(Error::EmptyFile);
    }
    Ok(cols)
}

pub fn load_column(path: impl AsRef<Path>, name: &str) -> Result<Vec<Option<f64>>> {
    let file = std::fs::File::open(path)?;
    Ok(read_columns(file, &[name])?.remove(0))
}

pub(crate) fn format_cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_cell(token: &str, row: usize, column: &str) -> Result<Option<f64>> {
    if token.is_empty() || token == MISSING_TOKEN {
        return Ok(None);
    }
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::ParseError {
            row,
            column: column.to_string(),
            token: token.to_string(),
        }),
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}
