//! Flat `section.key = value` configuration covering the pipeline, both
//! detectors and evaluation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::decision::{DetectorConfig, PtConfig};
use crate::error::{Error, Result};
use crate::io::{BeatFilter, DEFAULT_BEAT_CODES};
use crate::pipeline::PipelineConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub tolerance_ms: f64,
    /// Annotation mnemonics counted as beats.
    pub beat_codes: String,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            tolerance_ms: 100.0,
            beat_codes: DEFAULT_BEAT_CODES.to_string(),
        }
    }
}

impl EvalConfig {
    pub fn beat_filter(&self) -> BeatFilter {
        BeatFilter::from_codes(&self.beat_codes)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub pipeline: PipelineConfig,
    pub detector: DetectorConfig,
    pub pt: PtConfig,
    pub eval: EvalConfig,
}

impl Settings {
    /// Parses `key = value` lines. Values are TOML literals; anything that
    /// does not parse as one is taken as a bare string. `#` starts a
    /// comment.
    pub fn from_flat_str(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            s.apply_override(line).map_err(|e| match e {
                Error::Parse { message, .. } => Error::Parse {
                    line: n as u64 + 1,
                    message,
                },
                Error::Config(message) => Error::Config(format!("line {}: {message}", n + 1)),
                other => other,
            })?;
        }
        Ok(s)
    }

    /// Applies one `section.key=value` assignment.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(Error::Parse {
                line: 0,
                message: format!("expected key=value, got {assignment:?}"),
            });
        };
        let key = key.trim();
        let mut flat = self.to_flat();
        let current = flat
            .get(key)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown setting {key:?}; known settings: {}",
                    flat.keys().cloned().collect::<Vec<_>>().join(", ")
                ))
            })?
            .clone();
        let parsed = parse_value(value.trim());
        let parsed = match (&current, parsed) {
            (Value::Float(_), Value::Integer(i)) => Value::Float(i as f64),
            (Value::String(_), Value::Integer(_) | Value::Float(_) | Value::Boolean(_)) => {
                Value::String(value.trim().to_string())
            }
            (_, v) => v,
        };
        if std::mem::discriminant(&current) != std::mem::discriminant(&parsed) {
            return Err(Error::Config(format!(
                "{key}: expected a {}, got {value:?}",
                current.type_str()
            )));
        }
        flat.insert(key.to_string(), parsed);
        *self = Self::from_flat(flat)?;
        Ok(())
    }

    /// Every setting as `section.key = value`, one per line, sorted.
    pub fn to_flat_string(&self) -> String {
        self.to_flat()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    fn to_flat(&self) -> BTreeMap<String, Value> {
        let table = Table::try_from(self).expect("settings serialize to a table");
        let mut out = BTreeMap::new();
        for (section, inner) in table {
            if let Value::Table(inner) = inner {
                for (k, v) in inner {
                    out.insert(format!("{section}.{k}"), v);
                }
            }
        }
        out
    }

    fn from_flat(flat: BTreeMap<String, Value>) -> Result<Self> {
        let mut table = Table::new();
        for (key, v) in flat {
            let (section, field) = key.split_once('.').expect("flat keys are dotted");
            table
                .entry(section)
                .or_insert_with(|| Value::Table(Table::new()))
                .as_table_mut()
                .expect("section is a table")
                .insert(field.to_string(), v);
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))
    }

    /// Preprocessing for the classic detector: the shared pipeline with a
    /// 15 Hz upper edge and no smoothing.
    pub fn pt_pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            band_high_hz: PipelineConfig::classic().band_high_hz,
            smooth_enabled: false,
            ..self.pipeline.clone()
        }
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        self.pipeline.validate(fs)?;
        self.pt_pipeline().validate(fs)?;
        self.detector.validate()?;
        self.pt.validate()?;
        if !(self.eval.tolerance_ms >= 0.0 && self.eval.tolerance_ms.is_finite()) {
            return Err(Error::Config("eval.tolerance_ms must be nonnegative".into()));
        }
        Ok(())
    }
}

fn parse_value(text: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}
