use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

/// Outcome of one experiment run.
///
/// `runtime_ms` is kept out of the canonical JSON so that re-runs with the
/// same configuration produce identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config: BTreeMap<String, Value>,
    pub metrics: BTreeMap<String, f64>,
    pub pass: bool,
    #[serde(skip)]
    pub runtime_ms: u64,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            config: BTreeMap::new(),
            metrics: BTreeMap::new(),
            pass: false,
            runtime_ms: 0,
        }
    }

    pub fn config(mut self, key: &str, value: impl Serialize) -> Self {
        self.config.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    /// Canonical JSON; with `with_runtime` the wall-clock time is appended.
    pub fn to_json(&self, with_runtime: bool) -> String {
        let mut v = serde_json::to_value(self).expect("report is serializable");
        if with_runtime {
            v["runtime_ms"] = Value::from(self.runtime_ms);
        }
        canonical_json(&v)
    }

    /// `metric,value` rows in key order.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (k, v) in &self.metrics {
            let _ = writeln!(out, "{k},{}", format_f64(*v));
        }
        out
    }
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
///
/// Non-finite values, which JSON cannot carry, become `null`.
pub fn format_f64(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0000000000000000e0".into() } else { "0.0000000000000000e0".into() };
    }
    format!("{x:.16e}")
}

/// Pretty JSON with sorted keys and floats from [`format_f64`].
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => {
                let _ = write!(out, "{i}");
            }
            (None, Some(u)) => {
                let _ = write!(out, "{u}");
            }
            _ => out.push_str(&format_f64(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&serde_json::to_string(k).expect("string serializes"));
                out.push_str(": ");
                write_value(out, &map[*k], depth + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}
