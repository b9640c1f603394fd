//! Experiment configuration files.
//!
//! ```json
//! {
//!   "model":  { ModelSpec fields },
//!   "train":  { TrainConfig fields },
//!   "data":   { "name": "regression", "seed": 0, "n_train": 100, "n_val": 200 }
//!          or { "name": "spirals", "n_total": 513 },
//!   "output": { "dir": "runs/ex1", "svg": false }
//! }
//! ```
//!
//! Unknown keys anywhere are rejected.

use std::path::PathBuf;

use imres_core::datasets::{make_regression, make_spirals, LabeledSet};
use imres_core::network::{ModelSpec, TrainConfig};
use imres_core::{Error, Result};
use serde::Deserialize;

fn default_n_train() -> usize {
    100
}
fn default_n_val() -> usize {
    200
}
fn default_n_total() -> usize {
    513
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataConfig {
    Regression {
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_n_train")]
        n_train: usize,
        #[serde(default = "default_n_val")]
        n_val: usize,
    },
    Spirals {
        #[serde(default = "default_n_total")]
        n_total: usize,
    },
}

impl DataConfig {
    pub fn build(&self) -> Result<(LabeledSet, LabeledSet)> {
        match *self {
            DataConfig::Regression { seed, n_train, n_val } => make_regression(seed, n_train, n_val),
            DataConfig::Spirals { n_total } => make_spirals(n_total),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default)]
    pub svg: bool,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub train: TrainConfig,
    pub data: DataConfig,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        cfg.model.validate()?;
        cfg.train.validate()?;
        let (input_dim, output_dim) = match cfg.data {
            DataConfig::Regression { .. } => (1, 1),
            DataConfig::Spirals { .. } => (2, 1),
        };
        if cfg.model.input_dim != input_dim || cfg.model.output_dim != output_dim {
            return Err(Error::InvalidConfig(format!(
                "model maps {} -> {} but the dataset needs {input_dim} -> {output_dim}",
                cfg.model.input_dim, cfg.model.output_dim
            )));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "model": {"input_dim": 1, "hidden_dim": 5, "output_dim": 1, "depth": 10, "theta": 0.5, "activation": "relu"},
        "train": {"learning_rate": 0.01, "batch_size": 4, "epochs": 5, "loss": "squared-error"},
        "data": {"name": "regression"},
        "output": {"dir": "out"}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.model.horizon, 1.0);
        assert_eq!(cfg.model.reg_coeff, 0.1);
        assert_eq!(cfg.train.seed, 0);
        assert!(!cfg.train.reversible);
        assert_eq!(
            cfg.data,
            DataConfig::Regression {
                seed: 0,
                n_train: 100,
                n_val: 200
            }
        );
        assert!(!cfg.output.svg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let extra_top = MINIMAL.replacen('{', r#"{"notes": 1, "#, 1);
        assert!(matches!(ExperimentConfig::from_json(&extra_top), Err(Error::Parse { .. })));
        let extra_model = MINIMAL.replace(r#""depth": 10"#, r#""depth": 10, "width": 5"#);
        assert!(matches!(ExperimentConfig::from_json(&extra_model), Err(Error::Parse { .. })));
        let extra_data = MINIMAL.replace(r#""name": "regression""#, r#""name": "regression", "noise": 0.1"#);
        assert!(matches!(ExperimentConfig::from_json(&extra_data), Err(Error::Parse { .. })));
        let bad_name = MINIMAL.replace("regression", "mnist");
        assert!(matches!(ExperimentConfig::from_json(&bad_name), Err(Error::Parse { .. })));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let spirals = MINIMAL.replace(r#""name": "regression""#, r#""name": "spirals""#);
        assert!(matches!(ExperimentConfig::from_json(&spirals), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn bundled_configs_parse() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
        let mut seen = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let text = std::fs::read_to_string(&path).unwrap();
            ExperimentConfig::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
        assert!(seen >= 3);
    }
}
