//! Result serialization.
//!
//! Both formats carry the same two blocks: a metadata object (command, seed,
//! resolved configuration echo, solver diagnostics) and a results table.
//! Numbers are written in Rust's shortest round-trip form, so re-parsing
//! reproduces the exact bit pattern and CSV and JSON of one run agree
//! exactly; human-rounded values live in separate `*_4dp` columns.

use crate::config::{Flat, FlatMap};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x}"),
            Cell::Int(x) => format!("{x}"),
            Cell::Text(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(x) => json!(x),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

/// Rounded presentation of a numeric cell (4 decimals, the precision used in
/// the result tables people quote).
pub fn pretty(x: f64) -> Cell {
    Cell::Text(format!("{x:.4}"))
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Ordered metadata block.
#[derive(Debug, Clone, Default)]
pub struct Meta {
    entries: Vec<(String, Value)>,
}

impl Meta {
    pub fn new(command: &str, seed: Option<u64>) -> Self {
        let mut meta = Meta::default();
        meta.push("command", json!(command));
        if let Some(seed) = seed {
            meta.push("seed", json!(seed));
        }
        meta
    }

    pub fn push(&mut self, key: &str, value: Value) {
        self.entries.push((key.to_string(), value));
    }

    pub fn push_num(&mut self, key: &str, value: f64) {
        self.push(key, json!(value));
    }

    pub fn set_config_echo(&mut self, echo: &FlatMap) {
        let mut obj = Map::new();
        for (k, v) in echo {
            obj.insert(k.clone(), flat_to_json(v));
        }
        self.push("config", Value::Object(obj));
    }
}

fn flat_to_json(v: &Flat) -> Value {
    match v {
        Flat::Number(x) => json!(x),
        Flat::Integer(x) => json!(x),
        Flat::Text(s) => json!(s),
        Flat::Numbers(v) => json!(v),
        Flat::Integers(v) => json!(v),
        Flat::Texts(v) => json!(v),
    }
}

fn flatten_value(prefix: &str, value: &Value, out: &mut Vec<String>) {
    match value {
        Value::Object(obj) => {
            for (k, v) in obj {
                flatten_value(&format!("{prefix}.{k}"), v, out);
            }
        }
        other => out.push(format!("# {prefix} = {other}")),
    }
}

pub fn render_csv(meta: &Meta, table: &Table) -> String {
    let mut lines = Vec::new();
    for (key, value) in &meta.entries {
        flatten_value(key, value, &mut lines);
    }
    lines.push(table.columns.join(","));
    for row in &table.rows {
        lines.push(row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
    }
    lines.join("\n") + "\n"
}

pub fn render_json(meta: &Meta, table: &Table) -> String {
    let mut meta_obj = Map::new();
    for (k, v) in &meta.entries {
        meta_obj.insert(k.clone(), v.clone());
    }
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| Value::Array(row.iter().map(Cell::json).collect()))
        .collect();
    let doc = json!({
        "meta": Value::Object(meta_obj),
        "results": {
            "columns": table.columns,
            "rows": rows,
        }
    });
    serde_json::to_string_pretty(&doc).expect("serializable document") + "\n"
}
