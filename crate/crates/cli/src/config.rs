use std::collections::BTreeMap;
use std::path::Path;

use pucci_core::io::KvConfig;
use pucci_core::{Error, Result};
use serde::Serialize;
use serde_json::Value;

/// A parsed key-value config that remembers every value it hands out, so the
/// report can echo the fully resolved parameter set.
pub struct Resolved {
    kv: KvConfig,
    values: BTreeMap<String, Value>,
}

impl Resolved {
    pub fn load(path: Option<&Path>, allowed: &[&str], tol: Option<f64>) -> Result<Self> {
        let mut kv = match path {
            Some(p) => KvConfig::load(p, allowed)?,
            None => KvConfig::parse("", allowed)?,
        };
        if let Some(t) = tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Input(format!("--tol {t} must be positive")));
            }
            kv.set("tol", t.to_string());
        }
        Ok(Self {
            kv,
            values: BTreeMap::new(),
        })
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.kv.get(key).is_some()
    }

    pub fn record(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.values.insert(key.to_string(), v);
    }

    pub fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.kv.f64_or(key, default)?;
        self.record(key, v);
        Ok(v)
    }

    pub fn positive(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.f64(key, default)?;
        if v <= 0.0 {
            return Err(Error::Input(format!("key `{key}` must be positive, got {v}")));
        }
        Ok(v)
    }

    pub fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        let v = self.kv.usize_or(key, default)?;
        self.record(key, v);
        Ok(v)
    }

    pub fn bool(&mut self, key: &str, default: bool) -> Result<bool> {
        let v = self.kv.bool_or(key, default)?;
        self.record(key, v);
        Ok(v)
    }

    pub fn string(&mut self, key: &str, default: &str) -> String {
        let v = self.kv.str_or(key, default).to_string();
        self.record(key, &v);
        v
    }

    pub fn f64_list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let v = match self.kv.get(key) {
            None => default.to_vec(),
            Some(s) => parse_list(key, s, |t| t.parse::<f64>().ok().filter(|v| v.is_finite()))?,
        };
        self.record(key, &v);
        Ok(v)
    }

    pub fn usize_list(&mut self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        let v = match self.kv.get(key) {
            None => default.to_vec(),
            Some(s) => parse_list(key, s, |t| t.parse::<usize>().ok())?,
        };
        self.record(key, &v);
        Ok(v)
    }

    pub fn into_values(self) -> BTreeMap<String, Value> {
        self.values
    }
}

fn parse_list<T>(key: &str, s: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    if items.is_empty() {
        return Err(Error::Input(format!("key `{key}`: empty list")));
    }
    items
        .into_iter()
        .map(|t| parse(t).ok_or_else(|| Error::Input(format!("key `{key}`: bad list entry `{t}`"))))
        .collect()
}
