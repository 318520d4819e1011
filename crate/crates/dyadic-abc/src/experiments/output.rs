use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// Output flavour of the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// `x` with 12 significant digits, plain notation when that is short.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..=15).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.11e}")
    }
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            sig12(x)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with every float rounded to 12 significant digits.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let v = round_value(serde_json::to_value(value)?);
    Ok(serde_json::to_string_pretty(&v)?)
}

/// A flat table for CSV emission.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// `key,value` rows for any report, nested keys joined with dots.
pub fn flat_table<T: Serialize>(value: &T) -> Result<Table> {
    fn walk(prefix: &str, v: &Value, t: &mut Table) {
        let key = |k: &str| {
            if prefix.is_empty() {
                k.to_string()
            } else {
                format!("{prefix}.{k}")
            }
        };
        match v {
            Value::Object(o) => o.iter().for_each(|(k, v)| walk(&key(k), v, t)),
            Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| walk(&key(&i.to_string()), v, t)),
            Value::Number(n) if n.is_f64() => t.push(vec![prefix.into(), sig12(n.as_f64().unwrap_or(0.0))]),
            Value::String(s) => t.push(vec![prefix.into(), s.clone()]),
            Value::Null => t.push(vec![prefix.into(), String::new()]),
            other => t.push(vec![prefix.into(), other.to_string()]),
        }
    }
    let mut t = Table::new(&["key", "value"]);
    walk("", &serde_json::to_value(value)?, &mut t);
    Ok(t)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Cell helpers.
pub fn f(x: f64) -> String {
    sig12(x)
}

pub fn opt(x: Option<f64>) -> String {
    x.map(sig12).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(-2.5), "-2.5");
        assert_eq!(sig12(123456.789), "123456.789");
        assert_eq!(sig12(1e-9), "1.00000000000e-9");
        assert_eq!(sig12(std::f64::consts::PI * 1e3), "3141.59265359");
    }

    #[test]
    fn json_rounding() {
        let s = to_json_string(&serde_json::json!({"x": [1.0f64 / 3.0, 2], "y": "a"})).unwrap();
        assert!(s.contains("0.333333333333"), "{s}");
        assert!(!s.contains("0.3333333333333"), "{s}");
    }

    #[test]
    fn flattening() {
        let t = flat_table(&serde_json::json!({"a": {"b": [1, 0.5]}, "c": null})).unwrap();
        assert_eq!(t.to_csv_string().unwrap(), "key,value\na.b.0,1\na.b.1,0.5\nc,\n");
    }

    #[test]
    fn csv_quoting() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1/2".into(), "x,y".into()]);
        assert_eq!(t.to_csv_string().unwrap(), "a,b\n1/2,\"x,y\"\n");
    }
}
