use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use polyflow_core::flow::{FlowConfig, FlowKind, MetricPolicy, Preconditioner};
use polyflow_core::{Differentiation, Example, Model};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub curvature: f64,
    pub dim: usize,
    /// Inferred from the sign of the curvature when absent.
    #[serde(default)]
    pub model: Option<Model>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub sizes: Vec<usize>,
    pub lengths: Vec<f64>,
    #[serde(default)]
    pub differentiation: Differentiation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialMap {
    pub name: Example,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Audit,
    Energies,
    Flow,
    VariationCheck,
}

/// Domain metric before any flow: the coordinate metric or the one pulled
/// back by the initial map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum MetricChoice {
    #[default]
    Identity,
    Induced,
}

/// Flow settings; everything but `kind` falls back to the library defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub kind: FlowKind,
    pub dt0: Option<f64>,
    pub max_iters: Option<usize>,
    pub grad_tol: Option<f64>,
    pub armijo_c: Option<f64>,
    pub shrink: Option<f64>,
    pub growth: Option<f64>,
    pub metric_policy: Option<MetricPolicy>,
    pub preconditioner: Option<Preconditioner>,
}

impl FlowSection {
    pub fn resolve(&self) -> FlowConfig {
        let d = FlowConfig::new(self.kind);
        FlowConfig {
            kind: self.kind,
            dt0: self.dt0.unwrap_or(d.dt0),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            grad_tol: self.grad_tol.unwrap_or(d.grad_tol),
            armijo_c: self.armijo_c.unwrap_or(d.armijo_c),
            shrink: self.shrink.unwrap_or(d.shrink),
            growth: self.growth.unwrap_or(d.growth),
            metric_policy: self.metric_policy.unwrap_or(d.metric_policy),
            preconditioner: self.preconditioner.unwrap_or(d.preconditioner),
        }
    }
}

fn default_p_list() -> Vec<f64> {
    vec![2.0, 4.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetConfig,
    pub grid: GridConfig,
    pub initial_map: InitialMap,
    pub action: Action,
    #[serde(default)]
    pub metric: MetricChoice,
    #[serde(default)]
    pub flow: Option<FlowSection>,
    #[serde(default = "default_p_list")]
    pub p_list: Vec<f64>,
    pub output_prefix: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.action == Action::Flow && self.flow.is_none() {
            return Err(ConfigError::Invalid("action Flow needs a `flow` section".into()));
        }
        if self.action != Action::Flow && self.flow.is_some() {
            return Err(ConfigError::Invalid("`flow` given for a non-flow action".into()));
        }
        if self.output_prefix.as_os_str().is_empty() {
            return Err(ConfigError::Invalid("output_prefix is empty".into()));
        }
        if let Some(flow) = &self.flow {
            flow.resolve().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }
}
