//! Declarative run configuration: TOML or JSON files flattened to dotted
//! keys, resolved against per-command schemas with defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde_json::{Map, Value};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub type CResult<T> = std::result::Result<T, ConfigError>;

fn cerr<T>(msg: impl Into<String>) -> CResult<T> {
    Err(ConfigError(msg.into()))
}

/// A loaded config: dotted keys to leaf values, plus the seed and command
/// recorded in it, if any.
#[derive(Debug, Default)]
pub struct RawConfig {
    pub values: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub command: Option<String>,
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, Value>) -> CResult<()> {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                if k.is_empty() || k.contains('.') {
                    return cerr(format!("invalid key '{k}' under '{prefix}'"));
                }
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out)?;
            }
            Ok(())
        }
        // JSON has no infinities; a null in a manifest means the key was absent
        Value::Null => Ok(()),
        leaf => {
            out.insert(prefix.to_string(), leaf.clone());
            Ok(())
        }
    }
}

/// Nest dotted keys back into a tree.
pub fn unflatten(values: &BTreeMap<String, Value>) -> Value {
    let mut root = Map::new();
    for (k, v) in values {
        let parts: Vec<&str> = k.split('.').collect();
        let mut node = &mut root;
        for p in &parts[..parts.len() - 1] {
            node = node
                .entry(p.to_string())
                .or_insert_with(|| Value::Object(Map::new()))
                .as_object_mut()
                .expect("dotted keys never collide with leaves");
        }
        node.insert(parts[parts.len() - 1].to_string(), v.clone());
    }
    Value::Object(root)
}

impl RawConfig {
    /// Parse a `.toml` or `.json` file. A manifest written by a previous run
    /// is accepted too: its resolved `config` section is used and its seed
    /// and command are remembered.
    pub fn load(path: &Path) -> CResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let tree: Value = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?,
            _ => {
                let t: toml::Table = toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
                serde_json::to_value(t).map_err(|e| ConfigError(e.to_string()))?
            }
        };
        Self::from_tree(tree)
    }

    pub fn from_tree(tree: Value) -> CResult<Self> {
        let Value::Object(mut top) = tree else {
            return cerr("config root must be a table");
        };
        let mut raw = RawConfig::default();
        if top.contains_key("manifest_version") {
            raw.command = top.get("command").and_then(|v| v.as_str()).map(str::to_string);
            raw.seed = top.get("seed").and_then(|v| v.as_u64());
            let cfg = top.remove("config").unwrap_or(Value::Object(Map::new()));
            flatten("", &cfg, &mut raw.values)?;
            return Ok(raw);
        }
        if let Some(s) = top.remove("seed") {
            raw.seed = Some(s.as_u64().ok_or_else(|| ConfigError("seed: expected a non-negative integer".into()))?);
        }
        flatten("", &Value::Object(top), &mut raw.values)?;
        Ok(raw)
    }
}

/// Reads typed values for one command, falling back to defaults, and
/// records everything it resolved.
pub struct Resolver {
    raw: BTreeMap<String, Value>,
    used: BTreeSet<String>,
    pub resolved: BTreeMap<String, Value>,
}

impl Resolver {
    pub fn new(raw: RawConfig) -> Self {
        Resolver { raw: raw.values, used: BTreeSet::new(), resolved: BTreeMap::new() }
    }

    pub fn set(&mut self, key: &str, v: Value) {
        self.raw.insert(key.to_string(), v);
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.used.insert(key.to_string());
        self.raw.get(key).cloned()
    }

    fn get<T>(&mut self, key: &str, default: Option<T>, parse: impl Fn(&Value) -> Option<T>, show: impl Fn(&T) -> Value, what: &str) -> CResult<T> {
        let v = match self.take(key) {
            Some(v) => parse(&v).ok_or_else(|| ConfigError(format!("{key}: expected {what}, got {v}")))?,
            None => match default {
                Some(d) => d,
                None => return cerr(format!("missing required key '{key}'")),
            },
        };
        self.resolved.insert(key.to_string(), show(&v));
        Ok(v)
    }

    pub fn f64(&mut self, key: &str, default: f64) -> CResult<f64> {
        self.get(key, Some(default), Value::as_f64, |v| Value::from(*v), "a number")
    }

    pub fn req_f64(&mut self, key: &str) -> CResult<f64> {
        self.get(key, None, Value::as_f64, |v| Value::from(*v), "a number")
    }

    pub fn usize(&mut self, key: &str, default: usize) -> CResult<usize> {
        self.get(key, Some(default), |v| v.as_u64().map(|u| u as usize), |v| Value::from(*v), "a non-negative integer")
    }

    pub fn u64(&mut self, key: &str, default: u64) -> CResult<u64> {
        self.get(key, Some(default), Value::as_u64, |v| Value::from(*v), "a non-negative integer")
    }

    pub fn bool(&mut self, key: &str, default: bool) -> CResult<bool> {
        self.get(key, Some(default), Value::as_bool, |v| Value::from(*v), "true or false")
    }

    pub fn str(&mut self, key: &str, default: &str) -> CResult<String> {
        self.get(key, Some(default.to_string()), |v| v.as_str().map(str::to_string), |v| Value::from(v.as_str()), "a string")
    }

    pub fn req_str(&mut self, key: &str) -> CResult<String> {
        self.get(key, None, |v| v.as_str().map(str::to_string), |v| Value::from(v.as_str()), "a string")
    }

    /// A string key that may be absent; absent keys are not echoed.
    pub fn opt_str(&mut self, key: &str) -> CResult<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(_) => self.req_str(key).map(Some),
        }
    }

    /// One of `choices`, defaulting to the first.
    pub fn choice(&mut self, key: &str, choices: &[&str]) -> CResult<String> {
        let v = self.str(key, choices[0])?;
        if !choices.contains(&v.as_str()) {
            return cerr(format!("{key}: '{v}' is not one of {choices:?}"));
        }
        Ok(v)
    }

    pub fn f64_list(&mut self, key: &str, default: &[f64]) -> CResult<Vec<f64>> {
        let parse = |v: &Value| v.as_array().and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>());
        self.get(key, Some(default.to_vec()), parse, |v| Value::from(v.clone()), "a list of numbers")
    }

    pub fn usize_list(&mut self, key: &str, default: &[usize]) -> CResult<Vec<usize>> {
        let parse = |v: &Value| v.as_array().and_then(|a| a.iter().map(|x| x.as_u64().map(|u| u as usize)).collect::<Option<Vec<usize>>>());
        self.get(key, Some(default.to_vec()), parse, |v| Value::from(v.clone()), "a list of non-negative integers")
    }

    /// Reject keys that no part of the command read.
    pub fn finish(&self) -> CResult<()> {
        let unknown: Vec<&String> = self.raw.keys().filter(|k| !self.used.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            cerr(format!("unknown config key(s): {}", unknown.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(", ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flatten_round_trip() {
        let raw = RawConfig::from_tree(json!({"seed": 4, "a": {"b": 1.5, "c": {"d": "x"}}, "e": [1, 2]})).unwrap();
        assert_eq!(raw.seed, Some(4));
        assert_eq!(raw.values.keys().cloned().collect::<Vec<_>>(), vec!["a.b", "a.c.d", "e"]);
        assert_eq!(unflatten(&raw.values), json!({"a": {"b": 1.5, "c": {"d": "x"}}, "e": [1, 2]}));
    }

    #[test]
    fn resolver_defaults_required_and_unknown() {
        let raw = RawConfig::from_tree(json!({"m": {"n": 3, "typo": 1}})).unwrap();
        let mut r = Resolver::new(raw);
        assert_eq!(r.usize("m.n", 7).unwrap(), 3);
        assert_eq!(r.f64("m.x", 0.5).unwrap(), 0.5);
        let e = r.req_f64("m.lambda").unwrap_err();
        assert!(e.0.contains("m.lambda"));
        let e = r.finish().unwrap_err();
        assert!(e.0.contains("m.typo"));
        assert_eq!(r.resolved["m.x"], json!(0.5));
    }

    #[test]
    fn type_errors_name_the_key() {
        let mut r = Resolver::new(RawConfig::from_tree(json!({"k": "no"})).unwrap());
        assert!(r.f64("k", 1.0).unwrap_err().0.starts_with("k:"));
    }
}
