//! CSV and JSON report writers with a provenance header.

use gibbslab_core::prob::format_float_digits;
use gibbslab_core::ProbValue;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub config_hash: String,
    pub seed: u64,
    pub mode: String,
    pub precision: Option<usize>,
}

/// SHA-256 of the canonical (sorted-key, compact) JSON encoding.
pub fn config_hash(v: &Value) -> String {
    let canonical = serde_json::to_string(v).expect("JSON values always serialise");
    let digest = Sha256::digest(canonical.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

pub struct Fmt {
    pub precision: Option<usize>,
}

impl Fmt {
    pub fn f(&self, x: f64) -> String {
        match self.precision {
            Some(d) => format_float_digits(x, d),
            None => format!("{x:?}"),
        }
    }

    pub fn pv(&self, v: &ProbValue) -> String {
        v.format(self.precision)
    }
}

/// A CSV document: `# key: value` metadata lines, then one or more tables,
/// each introduced by `# table: name` and a header row.
pub struct Csv {
    out: String,
}

impl Csv {
    pub fn new(meta: &Meta) -> Self {
        let mut out = String::new();
        out.push_str(&format!("# {} {}\n", meta.tool, meta.version));
        out.push_str(&format!("# subcommand: {}\n", meta.subcommand));
        out.push_str(&format!("# config_hash: {}\n", meta.config_hash));
        out.push_str(&format!("# seed: {}\n", meta.seed));
        out.push_str(&format!("# mode: {}\n", meta.mode));
        if let Some(p) = meta.precision {
            out.push_str(&format!("# precision: {p}\n"));
        }
        Self { out }
    }

    pub fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        self.out.push_str(&format!("# {key}: {value}\n"));
    }

    pub fn table(&mut self, name: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) {
        self.out.push_str(&format!("# table: {name}\n"));
        self.out.push_str(&columns.join(","));
        self.out.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), columns.len());
            self.out.push_str(&row.join(","));
            self.out.push('\n');
        }
    }

    pub fn finish(self) -> String {
        self.out
    }
}

/// Symbols of a word joined with spaces, safe inside a CSV cell.
pub fn word(w: &[i32]) -> String {
    w.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn json(meta: &Meta, body: Value) -> String {
    let mut obj = serde_json::Map::new();
    obj.insert("meta".into(), serde_json::to_value(meta).expect("meta serialises"));
    if let Value::Object(fields) = body {
        obj.extend(fields);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("JSON values always serialise");
    s.push('\n');
    s
}
