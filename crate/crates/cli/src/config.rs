//! Parameter resolution: command-line flags override a flat JSON config file
//! whose keys mirror the long flag names.

use std::path::Path;

use serde_json::{Map, Value};

use crate::error::CliError;

/// Values read from an optional `--config` file.
#[derive(Debug, Default, Clone)]
pub struct Config {
    values: Map<String, Value>,
}

impl Config {
    /// Loads a flat JSON object. Nested objects and arrays are rejected.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses the text of a config file.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config is not valid JSON: {e}")))?;
        let Value::Object(values) = value else {
            return Err(CliError::Usage("config must be a JSON object".into()));
        };
        if let Some((k, _)) = values.iter().find(|(_, v)| v.is_object() || v.is_array()) {
            return Err(CliError::Usage(format!("config key `{k}` must be a scalar")));
        }
        Ok(Self { values })
    }

    /// Optional float: the flag wins, then the file.
    pub fn f64(&self, key: &str, flag: Option<f64>) -> Result<Option<f64>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| CliError::Usage(format!("config key `{key}` must be a number"))),
        }
    }

    /// Float with a default.
    pub fn f64_or(&self, key: &str, flag: Option<f64>, default: f64) -> Result<f64, CliError> {
        Ok(self.f64(key, flag)?.unwrap_or(default))
    }

    /// Required float.
    pub fn f64_req(&self, key: &str, flag: Option<f64>) -> Result<f64, CliError> {
        self.f64(key, flag)?.ok_or_else(|| missing(key))
    }

    /// Optional non-negative integer.
    pub fn usize(&self, key: &str, flag: Option<usize>) -> Result<Option<usize>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v
                .as_u64()
                .map(|x| Some(x as usize))
                .ok_or_else(|| CliError::Usage(format!("config key `{key}` must be a non-negative integer"))),
        }
    }

    /// Integer with a default.
    pub fn usize_or(&self, key: &str, flag: Option<usize>, default: usize) -> Result<usize, CliError> {
        Ok(self.usize(key, flag)?.unwrap_or(default))
    }

    /// Required integer.
    pub fn usize_req(&self, key: &str, flag: Option<usize>) -> Result<usize, CliError> {
        self.usize(key, flag)?.ok_or_else(|| missing(key))
    }

    /// String with a default.
    pub fn string_or(&self, key: &str, flag: Option<String>, default: &str) -> Result<String, CliError> {
        if let Some(s) = flag {
            return Ok(s);
        }
        match self.values.get(key) {
            None | Some(Value::Null) => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(CliError::Usage(format!("config key `{key}` must be a string"))),
        }
    }

    /// Sweep axis `<key>-start`, `<key>-stop`, `<key>-count`, or the single
    /// value `<key>` when no start is given.
    pub fn axis(&self, key: &str, fixed: Option<f64>, axis: AxisFlags) -> Result<Vec<f64>, CliError> {
        let start = self.f64(&format!("{key}-start"), axis.start)?;
        let Some(start) = start else {
            return Ok(vec![self.f64_req(key, fixed)?]);
        };
        let stop = self.f64_or(&format!("{key}-stop"), axis.stop, start)?;
        let count = self.usize_or(&format!("{key}-count"), axis.count, 1)?;
        linspace(start, stop, count).ok_or_else(|| CliError::Usage(format!("`{key}-count` must be at least 1")))
    }
}

/// Raw flags of one sweep axis.
#[derive(Debug, Clone, Copy, Default)]
pub struct AxisFlags {
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub count: Option<usize>,
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Option<Vec<f64>> {
    match count {
        0 => None,
        1 => Some(vec![start]),
        _ => Some(
            (0..count)
                .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                .collect(),
        ),
    }
}

fn missing(key: &str) -> CliError {
    CliError::Usage(format!("missing required parameter `--{key}`"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let c = Config::parse(r#"{"k1": 2.0, "n": 40, "solver": "dense"}"#).unwrap();
        assert_eq!(c.f64_req("k1", None).unwrap(), 2.0);
        assert_eq!(c.f64_req("k1", Some(3.0)).unwrap(), 3.0);
        assert_eq!(c.usize_req("n", None).unwrap(), 40);
        assert_eq!(c.string_or("solver", None, "auto").unwrap(), "dense");
        assert!(c.f64_req("k2", None).is_err());
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(Config::parse("[1, 2]").is_err());
        assert!(Config::parse(r#"{"k1": [1]}"#).is_err());
        let c = Config::parse(r#"{"k1": "one"}"#).unwrap();
        assert!(c.f64("k1", None).is_err());
    }

    #[test]
    fn axes() {
        assert_eq!(linspace(0.0, 1.0, 3).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(linspace(2.0, 5.0, 1).unwrap(), vec![2.0]);
        assert!(linspace(0.0, 1.0, 0).is_none());
        let c = Config::parse(r#"{"k32-start": 1.0, "k32-stop": 2.0, "k32-count": 5}"#).unwrap();
        assert_eq!(c.axis("k32", None, AxisFlags::default()).unwrap().len(), 5);
        assert_eq!(c.axis("k31", Some(1.5), AxisFlags::default()).unwrap(), vec![1.5]);
    }
}
