//! Self-describing result tables and their CSV/JSON serialization.
//!
//! Floats are written in their shortest round-trip form, so a table that
//! was computed twice from the same seed serializes to identical bytes.
//! The run timestamp is opt-in for the same reason.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

use super::HarnessError;

/// One table value.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(v) => Some(v as f64),
            Cell::Float(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) if v.is_nan() => f.write_str("nan"),
            Cell::Float(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Int(v) => s.serialize_i64(*v),
            Cell::Float(v) if v.is_finite() => s.serialize_f64(*v),
            // JSON has no infinities; keep them readable instead of null
            Cell::Float(v) => s.serialize_str(&Cell::Float(*v).to_string()),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Empty => s.serialize_none(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        // seeds above i64::MAX stay exact as text
        i64::try_from(v).map_or_else(|_| Cell::Text(v.to_string()), Cell::Int)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

impl RunMetadata {
    pub fn new(scenario: Option<String>, seed: u64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            scenario,
            seed,
            timestamp: None,
            extra: BTreeMap::new(),
        }
    }

    /// Stamps the current time as seconds since the Unix epoch.
    pub fn stamp_now(&mut self) {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.timestamp = Some(format!("unix:{secs}"));
    }
}

/// Rows of parameter tuples and metric outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResultTable {
    pub metadata: RunMetadata,
    columns: Vec<String>,
    #[serde(serialize_with = "serialize_rows")]
    rows: Vec<Vec<Cell>>,
}

fn serialize_rows<S: Serializer>(rows: &[Vec<Cell>], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for row in rows {
        seq.serialize_element(row)?;
    }
    seq.end()
}

impl SweepResultTable {
    pub fn new(columns: Vec<String>, metadata: RunMetadata) -> Self {
        Self {
            metadata,
            columns,
            rows: Vec::new(),
        }
    }

    /// # Panics
    /// If the row width differs from the column count.
    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the columns");
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric view of one column; non-numeric cells become `None`.
    pub fn column_f64(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Serializes in `format`.
    pub fn render(&self, format: ResultFormat) -> Result<Vec<u8>, HarnessError> {
        if self.rows.is_empty() {
            return Err(HarnessError::EmptyResult);
        }
        match format {
            ResultFormat::Csv => {
                let mut buf = Vec::new();
                self.write_csv(&mut buf)
                    .map_err(|e| HarnessError::Format(e.to_string()))?;
                Ok(buf)
            }
            ResultFormat::Json => {
                let mut buf = serde_json::to_vec_pretty(self).map_err(|e| HarnessError::Format(e.to_string()))?;
                buf.push(b'\n');
                Ok(buf)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultFormat {
    Csv,
    Json,
}

impl ResultFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ResultFormat::Csv => "csv",
            ResultFormat::Json => "json",
        }
    }

    /// Format implied by a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        path.extension()?.to_str()?.parse().ok()
    }
}

impl FromStr for ResultFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ResultFormat::Csv),
            "json" => Ok(ResultFormat::Json),
            other => Err(format!("unknown result format '{other}' (expected csv or json)")),
        }
    }
}

/// Writes `table` to `path`.
pub fn emit_results(table: &SweepResultTable, format: ResultFormat, path: &Path) -> Result<(), HarnessError> {
    let bytes = table.render(format)?;
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> SweepResultTable {
        let mut t = SweepResultTable::new(
            vec!["snr_r_db".into(), "L".into(), "seed".into()],
            RunMetadata::new(Some("demo".into()), 3),
        );
        t.push_row(vec![0.1.into(), "none".into(), 3u64.into()]);
        t.push_row(vec![f64::INFINITY.into(), Cell::Int(10), Cell::Empty]);
        t
    }

    #[test]
    fn csv_layout() {
        let text = String::from_utf8(table().render(ResultFormat::Csv).unwrap()).unwrap();
        assert_eq!(text, "snr_r_db,L,seed\n0.1,none,3\ninf,10,\n");
    }

    #[test]
    fn json_layout() {
        let v: serde_json::Value = serde_json::from_slice(&table().render(ResultFormat::Json).unwrap()).unwrap();
        assert_eq!(v["columns"][1], "L");
        assert_eq!(v["rows"][0][0], 0.1);
        assert_eq!(v["rows"][1][0], "inf");
        assert!(v["rows"][1][2].is_null());
        assert_eq!(v["metadata"]["seed"], 3);
        assert!(v["metadata"].get("timestamp").is_none());
    }

    #[test]
    fn floats_round_trip() {
        let x = 0.1 + 0.2;
        let mut t = SweepResultTable::new(vec!["x".into()], RunMetadata::new(None, 0));
        t.push_row(vec![x.into()]);
        let text = String::from_utf8(t.render(ResultFormat::Csv).unwrap()).unwrap();
        let back: f64 = text.lines().nth(1).unwrap().parse().unwrap();
        assert_eq!(back.to_bits(), x.to_bits());
    }

    #[test]
    fn empty_table_is_an_error() {
        let t = SweepResultTable::new(vec!["x".into()], RunMetadata::new(None, 0));
        let dir = tempfile::tempdir().unwrap();
        let err = emit_results(&t, ResultFormat::Csv, &dir.path().join("x.csv")).unwrap_err();
        assert!(matches!(err, HarnessError::EmptyResult));
    }

    #[test]
    fn format_parsing() {
        assert_eq!("JSON".parse::<ResultFormat>(), Ok(ResultFormat::Json));
        assert!("xml".parse::<ResultFormat>().is_err());
        assert_eq!(ResultFormat::from_path(Path::new("a/b.csv")), Some(ResultFormat::Csv));
    }
}
