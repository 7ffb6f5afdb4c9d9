//! Result files. CSV files open with a `#` comment carrying the tool version
//! and config digest; JSON files carry the same in a `meta` object.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::Format;

pub const TOOL: &str = "icdsim";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Header columns plus rows, rendered as CSV or as a JSON array of objects.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// One row per record, columns taken from the serialized field order.
    pub fn from_records<T: Serialize>(records: &[T]) -> Result<Self> {
        let mut table = Table::default();
        for r in records {
            let Value::Object(map) = serde_json::to_value(r)? else {
                anyhow::bail!("record is not a struct");
            };
            if table.columns.is_empty() {
                table.columns = map.keys().cloned().collect();
            }
            table.rows.push(map.into_iter().map(|(_, v)| v).collect());
        }
        Ok(table)
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.to_string(),
            (None, Some(i)) => i.to_string(),
            _ => n.as_f64().map(|f| f.to_string()).unwrap_or_default(),
        },
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

pub struct Sink {
    dir: PathBuf,
    format: Format,
    digest: String,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path, format: Format, digest: String) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), format, digest, written: Vec::new() })
    }

    pub fn header_line(&self) -> String {
        format!("# {TOOL} {VERSION} config={}\n", self.digest)
    }

    fn meta(&self) -> Value {
        json!({ "tool": TOOL, "version": VERSION, "config_sha256": self.digest })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes `stem.csv` or `stem.json` depending on the output format.
    pub fn table(&mut self, stem: &str, table: &Table) -> Result<()> {
        match self.format {
            Format::Csv => self.csv(stem, table),
            Format::Json => {
                let rows: Vec<Value> = table
                    .rows
                    .iter()
                    .map(|r| Value::Object(table.columns.iter().cloned().zip(r.iter().cloned()).collect::<Map<_, _>>()))
                    .collect();
                self.json(stem, &json!({ "columns": table.columns, "rows": rows }))
            }
        }
    }

    /// Always CSV, whatever the configured format.
    pub fn csv(&mut self, stem: &str, table: &Table) -> Result<()> {
        let mut buf = self.header_line().into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&table.columns)?;
            for row in &table.rows {
                w.write_record(row.iter().map(cell))?;
            }
            w.flush()?;
        }
        self.write(&format!("{stem}.csv"), &buf)
    }

    /// CSV produced by `fill`, behind the usual header comment.
    pub fn csv_with(&mut self, stem: &str, fill: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = self.header_line().into_bytes();
        fill(&mut buf)?;
        self.write(&format!("{stem}.csv"), &buf)
    }

    /// Always JSON; `body` fields are merged after `meta`.
    pub fn json<T: Serialize>(&mut self, stem: &str, body: &T) -> Result<()> {
        let mut doc = Map::new();
        doc.insert("meta".into(), self.meta());
        match serde_json::to_value(body)? {
            Value::Object(fields) => doc.extend(fields),
            other => {
                doc.insert("data".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
        text.push('\n');
        self.write(&format!("{stem}.json"), text.as_bytes())
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }
}
