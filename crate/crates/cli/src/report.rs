use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::Result;
use serde::Serialize;
use serde_json::Value;

use crate::args::Format;

/// Output of one command.
#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub params: Value,
    pub results: Value,
    pub quadrature: Value,
    pub tolerances: BTreeMap<String, f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    /// One-line human summary for stderr.
    #[serde(skip)]
    pub summary: String,
}

impl Report {
    pub fn new(command: &str, params: &impl Serialize) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            params: serde_json::to_value(params)?,
            results: Value::Null,
            quadrature: Value::Null,
            tolerances: BTreeMap::new(),
            pass: true,
            wall_time_s: None,
            summary: String::new(),
        })
    }

    pub fn results(mut self, results: impl Serialize) -> Result<Self> {
        self.results = serde_json::to_value(results)?;
        Ok(self)
    }

    pub fn quadrature(mut self, quadrature: impl Serialize) -> Result<Self> {
        self.quadrature = serde_json::to_value(quadrature)?;
        Ok(self)
    }

    pub fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.to_string(), value);
        self
    }

    pub fn pass(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }

    pub fn summary(mut self, text: impl Into<String>) -> Self {
        self.summary = text.into();
        self
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => Ok(serde_json::to_string_pretty(&serde_json::to_value(self)?)? + "\n"),
            Format::Csv => Ok(self.to_csv()?),
        }
    }

    /// `key,value` rows; nested keys are joined with dots, array entries are
    /// addressed by index.
    fn to_csv(&self) -> Result<String> {
        let mut rows = Vec::new();
        flatten("", &serde_json::to_value(self)?, &mut rows);
        let mut out = String::from("key,value\n");
        for (k, v) in rows {
            writeln!(out, "{},{}", csv_field(&k), csv_field(&v))?;
        }
        Ok(out)
    }
}

fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    let join = |key: &str| {
        if prefix.is_empty() {
            key.to_string()
        } else {
            format!("{prefix}.{key}")
        }
    };
    match value {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&join(k), v, rows)),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&join(&i.to_string()), v, rows)),
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
