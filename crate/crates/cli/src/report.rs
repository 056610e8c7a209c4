//! Result tables and their CSV / JSON encodings.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! values always encode to equal bytes. Missing values are empty CSV fields
//! and JSON `null`.

use std::io::Write;

use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(u64::from(v))
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn get(&self, row: usize, name: &str) -> Option<&Cell> {
        self.column(name).map(|c| &self.rows[row][c])
    }

    pub fn float(&self, row: usize, name: &str) -> Option<f64> {
        match self.get(row, name)? {
            Cell::Float(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::csv))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), v.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    /// Encodes the table, wrapping JSON output with `extra` fields if given.
    pub fn encode(&self, format: Format, extra: Option<(&str, Value)>) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        match format {
            Format::Csv => self.write_csv(&mut buf)?,
            Format::Json => {
                let value = match extra {
                    None => self.to_json(),
                    Some((key, v)) => {
                        let mut obj = Map::new();
                        obj.insert("rows".into(), self.to_json());
                        obj.insert(key.into(), v);
                        Value::Object(obj)
                    }
                };
                serde_json::to_writer_pretty(&mut buf, &value)?;
                buf.push(b'\n');
            }
        }
        Ok(buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(vec!["point", "variant", "value", "missing"]);
        t.push(vec![0usize.into(), "mask_only".into(), 0.1.into(), None.into()]);
        t.push(vec![1usize.into(), "a,b".into(), 1e-7.into(), Some(2.5).into()]);
        t
    }

    #[test]
    fn csv_encoding() {
        let bytes = sample().encode(Format::Csv, None).unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "point,variant,value,missing\n0,mask_only,0.1,\n1,\"a,b\",0.0000001,2.5\n"
        );
    }

    #[test]
    fn json_encoding() {
        let v: Value = serde_json::from_slice(&sample().encode(Format::Json, None).unwrap()).unwrap();
        assert_eq!(v[0]["missing"], Value::Null);
        assert_eq!(v[1]["value"], 1e-7);
        let keys: Vec<&String> = v[0].as_object().unwrap().keys().collect();
        assert_eq!(keys, ["point", "variant", "value", "missing"]);

        let w: Value =
            serde_json::from_slice(&sample().encode(Format::Json, Some(("summary", Value::Null))).unwrap()).unwrap();
        assert_eq!(w["rows"], v);
    }

    #[test]
    fn lookup() {
        let t = sample();
        assert_eq!(t.float(1, "missing"), Some(2.5));
        assert_eq!(t.float(0, "missing"), None);
        assert_eq!(t.float(0, "nope"), None);
    }
}
