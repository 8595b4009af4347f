//! Experiment parameters: defaults overlaid by an optional JSON config
//! file, then by `--param key=value` pairs, then by the dedicated flags.
//! Every value is validated against the target operation's preconditions
//! before any computation starts; violations are usage errors.

use std::fmt;
use std::path::PathBuf;

use serde_json::{Map, Value};

use chaos_core::spaces::NormSpec;

/// A parameter or configuration problem; mapped to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

#[derive(Clone, Debug)]
pub struct Params {
    map: Map<String, Value>,
    pub seed: u64,
    pub level_cap: Option<u32>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl Params {
    pub fn build(
        config_path: Option<&PathBuf>,
        params: &[String],
        seed: Option<u64>,
        out: Option<PathBuf>,
        format: Option<OutputFormat>,
        level_cap: Option<u32>,
    ) -> anyhow::Result<Self> {
        let mut map = Map::new();
        let mut file_seed = None;
        let mut file_out = None;
        let mut file_format = None;

        if let Some(path) = config_path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| usage(format!("config {} is not valid JSON: {e}", path.display())))?;
            let Value::Object(obj) = value else {
                return Err(usage("config root must be a JSON object"));
            };
            for (key, value) in obj {
                match key.as_str() {
                    "parameters" => {
                        let Value::Object(inner) = value else {
                            return Err(usage("config `parameters` must be an object"));
                        };
                        map.extend(inner);
                    }
                    "seed" => {
                        file_seed =
                            Some(value.as_u64().ok_or_else(|| {
                                usage("config `seed` must be a nonnegative integer")
                            })?);
                    }
                    "output" => {
                        file_out =
                            Some(PathBuf::from(value.as_str().ok_or_else(|| {
                                usage("config `output` must be a string path")
                            })?));
                    }
                    "format" => {
                        file_format = Some(match value.as_str() {
                            Some("json") => OutputFormat::Json,
                            Some("csv") => OutputFormat::Csv,
                            _ => return Err(usage("config `format` must be \"json\" or \"csv\"")),
                        });
                    }
                    "experiment" => {} // informational echo; the subcommand decides
                    other => {
                        return Err(usage(format!("unknown config field `{other}`")));
                    }
                }
            }
        }

        for pair in params {
            let Some((key, raw)) = pair.split_once('=') else {
                return Err(usage(format!(
                    "--param `{pair}` is not of the form key=value"
                )));
            };
            let value = serde_json::from_str::<Value>(raw)
                .unwrap_or_else(|_| Value::String(raw.to_string()));
            map.insert(key.to_string(), value);
        }

        Ok(Params {
            map,
            seed: seed.or(file_seed).unwrap_or(0),
            level_cap,
            out: out.or(file_out),
            format: format.or(file_format).unwrap_or(OutputFormat::Json),
        })
    }

    /// The config echo embedded in reports.
    pub fn echo(&self, experiment: &str) -> Value {
        let mut obj = Map::new();
        obj.insert("experiment".into(), Value::String(experiment.into()));
        obj.insert("parameters".into(), Value::Object(self.map.clone()));
        obj.insert("seed".into(), Value::from(self.seed));
        if let Some(cap) = self.level_cap {
            obj.insert("level_cap".into(), Value::from(cap));
        }
        Value::Object(obj)
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.map.get(key)
    }

    pub fn u64_or(&self, key: &str, default: u64) -> anyhow::Result<u64> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .ok_or_else(|| usage(format!("parameter `{key}` must be a nonnegative integer"))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> anyhow::Result<f64> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| usage(format!("parameter `{key}` must be a number"))),
        }
    }

    pub fn str_or(&self, key: &str, default: &str) -> anyhow::Result<String> {
        match self.map.get(key) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(usage(format!("parameter `{key}` must be a string"))),
        }
    }

    /// Working level: the experiment's choice clipped by `--level`.
    pub fn level(&self, key: &str, default: u32) -> anyhow::Result<u32> {
        let level = self.u64_or(key, default as u64)? as u32;
        let level = match self.level_cap {
            Some(cap) => level.min(cap),
            None => level,
        };
        if level > 22 {
            return Err(usage(format!(
                "level {level} exceeds the desk-scale cap 22 (4M cells)"
            )));
        }
        Ok(level)
    }

    pub fn norm_spec(&self, key: &str, default: &str) -> anyhow::Result<NormSpec> {
        let raw = self.str_or(key, default)?;
        raw.parse::<NormSpec>()
            .map_err(|e| usage(format!("parameter `{key}`: {e}")))
    }
}
