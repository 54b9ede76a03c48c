//! Deterministic report serialization: JSON summaries and CSV tables.
//!
//! Floating-point values are printed with 17 significant digits so that
//! every report round-trips bit-exactly and two runs with the same seed
//! produce byte-identical output.

use std::fmt::Write as _;

/// Format an f64 with 17 significant digits (round-trip exact).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{:.16e}", x)
}

/// Minimal JSON value with deterministic field order and 17-digit floats.
#[derive(Debug, Clone)]
pub enum JsonValue {
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<JsonValue>),
    Obj(Vec<(String, JsonValue)>),
}

impl JsonValue {
    pub fn obj() -> Self {
        JsonValue::Obj(Vec::new())
    }

    /// Append a field to an object value (panics on non-objects).
    pub fn push(&mut self, key: &str, value: JsonValue) {
        match self {
            JsonValue::Obj(fields) => fields.push((key.to_string(), value)),
            _ => panic!("push on non-object JSON value"),
        }
    }

    fn write_into(&self, out: &mut String) {
        match self {
            JsonValue::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            JsonValue::Int(i) => {
                let _ = write!(out, "{}", i);
            }
            JsonValue::Num(x) => {
                if x.is_finite() {
                    // JSON has no inf/nan; quote them if they ever appear.
                    out.push_str(&fmt_f64(*x));
                } else {
                    let _ = write!(out, "\"{}\"", fmt_f64(*x));
                }
            }
            JsonValue::Str(s) => {
                out.push('"');
                for c in s.chars() {
                    match c {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        c if (c as u32) < 0x20 => {
                            let _ = write!(out, "\\u{:04x}", c as u32);
                        }
                        c => out.push(c),
                    }
                }
                out.push('"');
            }
            JsonValue::Arr(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write_into(out);
                }
                out.push(']');
            }
            JsonValue::Obj(fields) => {
                out.push('{');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    let _ = write!(out, "\"{}\":", k);
                    v.write_into(out);
                }
                out.push('}');
            }
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = String::new();
        self.write_into(&mut s);
        s
    }
}

/// Structured record of ratios, eigenvalues, constants, and pass/fail flags.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub command: String,
    pub pass: bool,
    pub fields: Vec<(String, JsonValue)>,
}

impl ExperimentReport {
    pub fn new(command: &str) -> Self {
        ExperimentReport {
            command: command.to_string(),
            pass: true,
            fields: Vec::new(),
        }
    }

    pub fn push(&mut self, key: &str, value: JsonValue) {
        self.fields.push((key.to_string(), value));
    }

    pub fn to_json(&self) -> String {
        let mut obj = JsonValue::obj();
        obj.push("command", JsonValue::Str(self.command.clone()));
        obj.push("pass", JsonValue::Bool(self.pass));
        for (k, v) in &self.fields {
            obj.push(k, v.clone());
        }
        obj.to_json()
    }
}

/// CSV table with a fixed header; cells are preformatted strings.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "CSV row arity mismatch");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(&self.header.join(","));
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Deterministic per-trial seed schedule shared by the CLI and test harnesses.
pub fn trial_seed(base: u64, trial: u64) -> u64 {
    base ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x1234_5678_9ABC_DEF1)
}
