//! Tabular experiment output as CSV or JSON.
//!
//! CSV: `# key=value` metadata lines, one header row, then data rows.
//! JSON: `{"meta": {...}, "rows": [{column: value, ...}, ...]}`.
//! Floats carry 12 significant digits in both formats.

use serde_json::{Map, Value};
use std::io::Write;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const SIG_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format `{other}` (csv, json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x.into())
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Missing, Into::into)
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    fn to_csv(&self) -> String {
        match self {
            Cell::Num(x) => format_sig(*x, SIG_DIGITS),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) => format_sig(*x, SIG_DIGITS)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Missing => Value::Null,
        }
    }

    fn from_csv(s: &str) -> Cell {
        if s.is_empty() {
            Cell::Missing
        } else if let Ok(i) = s.parse::<i64>() {
            Cell::Int(i)
        } else if let Ok(x) = s.parse::<f64>() {
            Cell::Num(x)
        } else {
            Cell::Text(s.to_string())
        }
    }
}

/// `printf("%.{sig}g")`.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= sig as i32 {
        format!("{}e{}{:02}", trim_zeros(mant), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (sig as i32 - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ExperimentReport {
    pub fn new(columns: &[&str]) -> Self {
        Self { meta: Vec::new(), columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta_get(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    /// Numeric column; non-numeric cells become NaN.
    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        Some(self.column(name)?.into_iter().map(|c| c.as_f64().unwrap_or(f64::NAN)).collect())
    }

    pub fn write<W: Write>(&self, w: W, format: Format) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.meta {
            writeln!(w, "# {k}={}", v.replace('\n', " "))?;
        }
        let mut cw = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        cw.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            cw.write_record(row.iter().map(Cell::to_csv)).map_err(csv_err)?;
        }
        cw.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        let mut meta = Map::new();
        for (k, v) in &self.meta {
            let val = if k == "schema_version" {
                v.parse::<u64>().map_or_else(|_| Value::from(v.as_str()), Value::from)
            } else {
                Value::from(v.as_str())
            };
            meta.insert(k.clone(), val);
        }
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().map(Cell::to_json)).collect()))
            .collect();
        let mut root = Map::new();
        root.insert("meta".into(), Value::Object(meta));
        root.insert("rows".into(), Value::Array(rows));
        serde_json::to_writer_pretty(&mut w, &Value::Object(root)).map_err(|e| Error::Config(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    }

    /// Parse the CSV schema written by [`ExperimentReport::write_csv`].
    pub fn read_csv(text: &str) -> Result<Self> {
        let mut meta = Vec::new();
        let mut body_start = text.len();
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("bad metadata line `{}`", line.trim_end())))?;
                meta.push((k.to_string(), v.to_string()));
                offset += line.len();
            } else {
                body_start = offset;
                break;
            }
        }
        let mut cr = csv::Reader::from_reader(&text.as_bytes()[body_start..]);
        let columns: Vec<String> = cr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in cr.records() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != columns.len() {
                return Err(Error::Config(format!("row has {} fields, header has {}", rec.len(), columns.len())));
            }
            rows.push(rec.iter().map(Cell::from_csv).collect());
        }
        if !meta.iter().any(|(k, _)| k == "schema_version") {
            return Err(Error::Config("missing schema_version metadata".into()));
        }
        Ok(Self { meta, columns, rows })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("CSV: {e}"))
}
