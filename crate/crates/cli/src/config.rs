//! Effective configuration: defaults, then the `--config` file, then
//! `--set` overrides, then explicit flags.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use consolidate_core::experiments::{PruneConfig, RunConfig};

use crate::{CliError, Result};

/// `sweep` configuration: a base run plus the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub base: RunConfig,
    /// Empty means the default grid for the method and network.
    pub lambdas: Vec<f64>,
    pub runs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            base: RunConfig {
                penalty: consolidate_core::experiments::PenaltyMode::Original,
                ..RunConfig::default()
            },
            lambdas: Vec::new(),
            runs: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DemoConfig {
    pub alpha: f64,
    pub lambda: f64,
    pub omega: f64,
    pub steps: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            lambda: 10.0,
            omega: 3.0,
            steps: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum EchoedConfig {
    TrainSeq(RunConfig),
    Sweep(SweepConfig),
    Prune(PruneConfig),
    DemoExplosion(DemoConfig),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `value` as JSON, falling back to a plain string; a bare
/// comma-separated list of numbers becomes an array.
fn parse_value(raw: &str) -> Value {
    if let Ok(v) = serde_json::from_str(raw) {
        return v;
    }
    if raw.contains(',') {
        let items: Option<Vec<Value>> = raw
            .split(',')
            .map(|s| serde_json::from_str::<Value>(s.trim()).ok().filter(Value::is_number))
            .collect();
        if let Some(items) = items {
            return Value::Array(items);
        }
    }
    Value::String(raw.to_string())
}

/// Applies one `KEY=VALUE` override. Only keys that already exist can be
/// set; a key missing at the top level is looked up under `base` as well.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| usage(format!("override {assignment:?} is not KEY=VALUE")))?;
    let first = key.split('.').next().unwrap_or_default();
    let mut node = match root.get(first) {
        None if root.get("base").is_some_and(|b| b.get(first).is_some()) => &mut root["base"],
        _ => root,
    };
    for part in key.split('.') {
        node = node
            .as_object_mut()
            .and_then(|o| o.get_mut(part))
            .ok_or_else(|| usage(format!("unknown config key {key:?}")))?;
    }
    *node = parse_value(raw);
    Ok(())
}

/// Merges the layers for one command's configuration type.
pub fn effective<T>(file: Option<&Path>, overrides: &[String], unwrap: impl Fn(EchoedConfig) -> Option<T>) -> Result<T>
where
    T: Serialize + DeserializeOwned + Default,
{
    let base: T = match file {
        None => T::default(),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let value: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            // An echoed config.json carries a "command" tag; plain files do not.
            if value.get("command").is_some() {
                let echoed: EchoedConfig =
                    serde_json::from_value(value).map_err(|e| usage(format!("{}: {e}", path.display())))?;
                unwrap(echoed).ok_or_else(|| usage(format!("{} was written by a different command", path.display())))?
            } else {
                serde_json::from_value(value).map_err(|e| usage(format!("{}: {e}", path.display())))?
            }
        }
    };
    let mut value = serde_json::to_value(&base).map_err(consolidate_core::Error::from)?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    serde_json::from_value(value).map_err(|e| usage(format!("invalid configuration: {e}")))
}

pub fn echo(out: &Path, cfg: &EchoedConfig) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let path = out.join("config.json");
    let text = serde_json::to_string_pretty(cfg).map_err(consolidate_core::Error::from)?;
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
}
