//! Output rendering and strategy files.
//!
//! CSV output opens with a `#`-prefixed JSON header line and may close with
//! a `# summary` JSON line. JSON output wraps the same header and the data
//! in one document. Floats print in shortest round-trip form, so equal
//! values give equal bytes.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::strategies::Strategy;
use crate::Result;

pub const TOOL: &str = "multibell";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct OutputHeader {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub config: Value,
    /// Extra reference values, e.g. an asymptote for plots.
    #[serde(skip_serializing_if = "Value::is_null")]
    pub meta: Value,
}

impl OutputHeader {
    pub fn new(command: &str, seed: Option<u64>, config: Value) -> Self {
        OutputHeader {
            tool: TOOL,
            version: VERSION,
            command: command.to_string(),
            seed,
            config,
            meta: Value::Null,
        }
    }

    pub fn with_meta(mut self, meta: Value) -> Self {
        self.meta = meta;
        self
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Rows as JSON objects keyed by column, values kept as strings.
    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    Value::Object(
                        self.columns
                            .iter()
                            .zip(r)
                            .map(|(c, v)| (c.to_string(), cell_value(v)))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

fn cell_value(s: &str) -> Value {
    if let Ok(i) = s.parse::<i64>() {
        return json!(i);
    }
    if let Ok(x) = s.parse::<f64>() {
        if x.is_finite() {
            return json!(x);
        }
    }
    match s {
        "true" => json!(true),
        "false" => json!(false),
        "" => Value::Null,
        _ => json!(s),
    }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A command's full output before rendering.
#[derive(Clone, Debug)]
pub struct Document {
    pub header: OutputHeader,
    pub table: Table,
    pub summary: Value,
    /// Replaces the table rows in JSON output when set.
    pub json_body: Option<Value>,
}

impl Document {
    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => {
                let mut out = String::new();
                out.push_str("# ");
                out.push_str(&serde_json::to_string(&self.header)?);
                out.push('\n');
                out.push_str(&self.table.columns.join(","));
                out.push('\n');
                for row in &self.table.rows {
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
                if !self.summary.is_null() {
                    out.push_str("# summary ");
                    out.push_str(&serde_json::to_string(&self.summary)?);
                    out.push('\n');
                }
                Ok(out)
            }
            Format::Json => {
                let data = self.json_body.clone().unwrap_or_else(|| self.table.to_json());
                let mut doc = json!({ "header": self.header, "data": data });
                if !self.summary.is_null() {
                    doc["summary"] = self.summary.clone();
                }
                let mut s = serde_json::to_string_pretty(&doc)?;
                s.push('\n');
                Ok(s)
            }
        }
    }
}

pub fn load_strategy(path: &Path) -> Result<Strategy> {
    Strategy::from_json(&fs::read_to_string(path)?)
}

pub fn save_strategy(path: &Path, strategy: &Strategy) -> Result<()> {
    let mut text = strategy.to_json()?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
