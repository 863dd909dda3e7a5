//! Result documents and their JSON and CSV renderings.

use clap::ValueEnum;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Rows for the CSV rendering of a curve.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub struct Document {
    config: Value,
    result: Value,
    table: Option<Table>,
    /// Raw payload written instead of the document (a sanitized database).
    pub data: Option<String>,
    pub status: u8,
    pub note: Option<String>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Document {
    pub fn object(config: Value, result: Value) -> Self {
        Document {
            config,
            result,
            table: None,
            data: None,
            status: 0,
            note: None,
        }
    }

    pub fn curve(config: Value, result: Value, table: Table) -> Self {
        Document {
            table: Some(table),
            ..Document::object(config, result)
        }
    }

    pub fn data(config: Value, result: Value, data: String) -> Self {
        Document {
            data: Some(data),
            ..Document::object(config, result)
        }
    }

    pub fn render(&self, format: Format) -> Result<String, String> {
        match format {
            Format::Json => {
                let doc = json!({
                    "rdeq_version": env!("CARGO_PKG_VERSION"),
                    "config": self.config,
                    "result": self.result,
                });
                Ok(serde_json::to_string_pretty(&doc).expect("documents serialize") + "\n")
            }
            Format::Csv => {
                let table = self
                    .table
                    .as_ref()
                    .ok_or("csv output is only available for rd, gamma and tradeoff")?;
                let mut out = format!("# config: {}\n", self.config);
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&table.header).map_err(|e| e.to_string())?;
                for row in &table.rows {
                    w.write_record(row.iter().map(cell)).map_err(|e| e.to_string())?;
                }
                out.push_str(&String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).expect("csv is utf-8"));
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rendering() {
        let mut t = Table::new(&["D", "R", "reason"]);
        t.row(vec![json!(0.1), Value::Null, json!("too, low")]);
        let doc = Document::curve(json!({"seed": 1}), json!({}), t);
        let text = doc.render(Format::Csv).unwrap();
        assert_eq!(text, "# config: {\"seed\":1}\nD,R,reason\n0.1,,\"too, low\"\n");
        assert!(Document::object(json!({}), json!({})).render(Format::Csv).is_err());
    }
}
