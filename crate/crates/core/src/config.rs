//! JSON configuration file shared by all CLI commands.
//!
//! ```json
//! {
//!   "network": {"n": 100, "lambda_e": 1, "lambda_s": 1, "lambda": 1},
//!   "ctmc": {"states": [{"kind": "ring"}, {"kind": "complete"}], "q": ["sqrt(n)", "sqrt(n)"], "p": [[0, 1], [1, 0]]},
//!   "run": {"horizon": 2000, "burn_in": 200, "seed": 1, "replicates": 20, "mode": "full_gossip"}
//! }
//! ```
//!
//! Any key can be overridden with `key.path=value` (see [`apply_override`]).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ctmc::CtmcSpec;
use crate::engine::{Mode, SimConfig, SourceDelivery, DEFAULT_SPREAD_CAP};
use crate::experiments::{DEFAULT_HORIZON, DEFAULT_REPLICATES};
use crate::topology::{read_edge_list, TopologySpec};
use crate::{Error, Result};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub n: usize,
    #[serde(default = "one")]
    pub lambda_e: f64,
    #[serde(default = "one")]
    pub lambda_s: f64,
    #[serde(default = "one")]
    pub lambda: f64,
}

fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}
fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}
fn default_scenario() -> String {
    "custom".into()
}
fn default_cap() -> f64 {
    DEFAULT_SPREAD_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Defaults to 10% of the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub source_delivery: SourceDelivery,
    /// Scenario label written to sweep output.
    #[serde(default = "default_scenario")]
    pub scenario: String,
    #[serde(default = "default_cap")]
    pub spread_cap: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            horizon: default_horizon(),
            burn_in: None,
            seed: 0,
            replicates: default_replicates(),
            mode: Mode::default(),
            source_delivery: SourceDelivery::default(),
            scenario: default_scenario(),
            spread_cap: default_cap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub network: NetworkSection,
    pub ctmc: CtmcSpec,
    #[serde(default)]
    pub run: RunSection,
}

impl ConfigFile {
    /// Parses a JSON document, applying `overrides` (`key.path=value`) first.
    /// Relative edge-list paths are resolved against `base_dir`.
    pub fn from_json(text: &str, overrides: &[String], base_dir: Option<&Path>) -> Result<Self> {
        let mut doc: Value = serde_json::from_str(text).map_err(|e| Error::config(format!("invalid JSON: {e}")))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let mut cfg: ConfigFile = serde_json::from_value(doc).map_err(|e| Error::config(e.to_string()))?;
        cfg.resolve_edge_files(base_dir)?;
        cfg.sim_config().validate()?;
        cfg.ctmc.at(cfg.network.n)?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, overrides, path.parent())
    }

    fn resolve_edge_files(&mut self, base_dir: Option<&Path>) -> Result<()> {
        for state in &mut self.ctmc.states {
            if let TopologySpec::Custom { edges, weights, path } = state {
                let Some(p) = path.take() else { continue };
                if !edges.is_empty() {
                    return Err(Error::config("custom topology gives both `edges` and `path`"));
                }
                let mut full = PathBuf::from(&p);
                if full.is_relative() {
                    if let Some(dir) = base_dir {
                        full = dir.join(full);
                    }
                }
                if !full.exists() {
                    return Err(Error::config(format!("edge-list file {} does not exist", full.display())));
                }
                let (e, w) = read_edge_list(&full)?;
                *edges = e;
                if weights.is_none() {
                    *weights = w;
                }
            }
        }
        Ok(())
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            n: self.network.n,
            lambda_e: self.network.lambda_e,
            lambda_s: self.network.lambda_s,
            lambda: self.network.lambda,
            ctmc: self.ctmc.clone(),
            horizon: self.run.horizon,
            burn_in: self.run.burn_in.unwrap_or(0.1 * self.run.horizon),
            seed: self.run.seed,
            mode: self.run.mode,
            source_delivery: self.run.source_delivery,
            spread_cap: self.run.spread_cap,
        }
    }
}

/// Sets a dotted path (`run.seed=3`, `ctmc.q.0="sqrt(n)"`) in a JSON
/// document. The value is parsed as JSON when possible and otherwise
/// taken as a string. Numeric segments index into arrays.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override {assignment:?} is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::config(format!("override key {key:?} has an empty segment")));
    }
    let mut cur = doc;
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), value);
                    return Ok(());
                }
                map.entry(seg.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| Error::config(format!("override key {key:?}: {seg:?} is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::config(format!("override key {key:?}: index {idx} out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::config(format!("override key {key:?} descends into a scalar"))),
        };
    }
    Ok(())
}
