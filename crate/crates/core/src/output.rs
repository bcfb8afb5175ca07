//! Tabular CSV/JSON emission with a metadata header.
//!
//! Floats are written with 17 significant digits so a value read back is
//! bit-identical to the one written, and no timestamps are embedded, so
//! identical inputs produce identical bytes.

use std::str::FromStr;

use serde_json::{Map, Number, Value};

/// 17-significant-digit scientific rendering of a double.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    UInt(u64),
    Float(f64),
    Bool(bool),
    Text(String),
    Null,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::UInt(v) => v.to_string(),
            Cell::Float(v) => fmt17(*v),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::UInt(v) => Value::from(*v),
            Cell::Float(v) if v.is_finite() => {
                Value::Number(Number::from_str(&fmt17(*v)).expect("formatted float parses"))
            }
            Cell::Float(_) | Cell::Null => Value::Null,
            Cell::Bool(v) => Value::Bool(*v),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::UInt(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::UInt(v.into())
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Null, Cell::Float)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

/// Ordered key/value pairs describing how a table was produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata(pub Vec<(String, String)>);

impl Metadata {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.into(), value.to_string()));
    }

    pub fn extend(&mut self, other: &Metadata) {
        self.0.extend(other.0.iter().cloned());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub metadata: Metadata,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            metadata: Metadata::default(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// `# key: value` header lines, then a column line and one line per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata.0 {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// `{"metadata": {...}, "rows": [{column: value, ...}, ...]}`; non-finite
    /// floats become `null`.
    pub fn to_json(&self) -> String {
        let metadata: Map<String, Value> = self
            .metadata
            .0
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.columns
                        .iter()
                        .zip(row)
                        .map(|(c, cell)| (c.to_string(), cell.json()))
                        .collect(),
                )
            })
            .collect();
        let mut doc = Map::new();
        doc.insert("metadata".into(), Value::Object(metadata));
        doc.insert("rows".into(), Value::Array(rows));
        let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.944911182523068, 1e-300, 123456.789, -2.5, 0.1] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits: String = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).collect();
            assert_eq!(digits.len(), 17);
        }
        assert_eq!(fmt17(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn csv_and_json_layout() {
        let mut t = Table::new(vec!["l", "probability", "note"]);
        t.metadata.push("command", "test");
        t.push(vec![0u32.into(), 0.5.into(), "a".into()]);
        t.push(vec![1u32.into(), f64::NEG_INFINITY.into(), Cell::Null]);
        let csv = t.to_csv();
        assert_eq!(
            csv,
            "# command: test\nl,probability,note\n0,5.0000000000000000e-1,a\n1,-inf,\n"
        );
        let json: Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(json["metadata"]["command"], "test");
        assert_eq!(json["rows"][0]["probability"].as_f64(), Some(0.5));
        assert!(json["rows"][1]["probability"].is_null());
        assert!(t.to_json().contains("5.0000000000000000e-1"));
    }
}
