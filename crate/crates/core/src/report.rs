//! Deterministic text reports.
//!
//! Reports are TOML documents written by hand so that field order and
//! float formatting (17 significant digits) are fixed.

use std::fmt::Write as _;

use crate::harris::{DistanceRow, TraceEntry, TraceValue};
use crate::logspace::{LogReal, Rate};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Bool(bool),
    Str(String),
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Float(x) => format_float(*x),
            Value::Int(i) => i.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Str(s) => format!("{s:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub entries: Vec<(String, Value)>,
}

impl Section {
    pub fn new(name: impl Into<String>) -> Self {
        Section {
            name: name.into(),
            entries: Vec::new(),
        }
    }

    pub fn float(&mut self, key: &str, x: f64) -> &mut Self {
        self.entries.push((key.into(), Value::Float(x)));
        self
    }

    pub fn int(&mut self, key: &str, i: i64) -> &mut Self {
        self.entries.push((key.into(), Value::Int(i)));
        self
    }

    pub fn bool(&mut self, key: &str, b: bool) -> &mut Self {
        self.entries.push((key.into(), Value::Bool(b)));
        self
    }

    pub fn str(&mut self, key: &str, s: &str) -> &mut Self {
        self.entries.push((key.into(), Value::Str(s.into())));
        self
    }

    /// `key` (may overflow) and `ln_key`.
    pub fn log(&mut self, key: &str, x: LogReal) -> &mut Self {
        self.float(key, x.value()).float(&format!("ln_{key}"), x.ln())
    }

    /// `key` (may round to 1), `ln_key` and `ln_ln_key`.
    pub fn rate(&mut self, key: &str, r: Rate) -> &mut Self {
        self.float(key, r.value())
            .float(&format!("ln_{key}"), r.log_rate())
            .float(&format!("ln_ln_{key}"), r.ln_log_rate())
    }

    pub fn trace(&mut self, entries: &[TraceEntry]) -> &mut Self {
        for e in entries {
            let stage = e.stage.replace(' ', "_");
            let key = |prefix: &str| format!("{stage}.{prefix}{}", e.name);
            match e.value {
                TraceValue::Real(x) => self.float(&key(""), x),
                TraceValue::Log(x) => self.float(&key(""), x.value()).float(&key("ln_"), x.ln()),
                TraceValue::Rate(r) => self
                    .float(&key(""), r.value())
                    .float(&key("ln_"), r.log_rate())
                    .float(&key("ln_ln_"), r.ln_log_rate()),
            };
        }
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub sections: Vec<Section>,
}

impl Report {
    pub fn section(&mut self, name: &str) -> &mut Section {
        self.sections.push(Section::new(name));
        self.sections.last_mut().expect("just pushed")
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "[{}]", s.name);
            for (k, v) in &s.entries {
                let key = if k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                    k.clone()
                } else {
                    format!("{k:?}")
                };
                let _ = writeln!(out, "{key} = {}", v.render());
            }
        }
        out
    }
}

/// `n,exact_distance,bound_value,margin`.
pub fn distance_csv(rows: &[DistanceRow]) -> String {
    let mut out = String::from("n,exact_distance,bound_value,margin\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.n,
            format_float(r.exact),
            format_float(r.bound()),
            format_float(r.margin())
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_parseable_toml() {
        let rho = Rate::from_log_rate(1e-300).unwrap();
        let mut r = Report::default();
        r.section("constants")
            .float("x", 0.1)
            .float("big", f64::INFINITY)
            .int("m", 8)
            .bool("passed", true)
            .str("kind", "kendall")
            .log("d", LogReal::from_ln(1e6))
            .rate("rho", rho);
        let text = r.render();
        assert!(text.contains("x = 1.0000000000000001e-1"));
        assert!(text.contains("ln_d = 1.0000000000000000e6"));
        let parsed: toml::Value = toml::from_str(&text).unwrap();
        assert_eq!(parsed["constants"]["m"].as_integer(), Some(8));
        assert_eq!(parsed["constants"]["rho"].as_float(), Some(1.0));
        assert_eq!(parsed["constants"]["ln_rho"].as_float(), Some(rho.log_rate()));
    }

    #[test]
    fn csv_header_and_rows() {
        let rows = [DistanceRow {
            n: 1,
            exact: 0.5,
            ln_bound: 0.0,
        }];
        let csv = distance_csv(&rows);
        assert_eq!(
            csv,
            "n,exact_distance,bound_value,margin\n1,5.0000000000000000e-1,1.0000000000000000e0,5.0000000000000000e-1\n"
        );
    }
}
