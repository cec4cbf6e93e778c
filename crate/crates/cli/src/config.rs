//! Run configuration files and command-line overrides.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use efrk::driver::{GridSpec, InitialCondition, RunConfig, StepControl};
use efrk::{ModelParams, SchemeKind};

/// Reads a JSON run configuration; unknown keys are rejected.
pub fn load(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    parse(&text).with_context(|| format!("invalid config {}", path.display()))
}

pub fn parse(text: &str) -> Result<RunConfig> {
    Ok(serde_json::from_str(text)?)
}

/// Field overrides from the command line. Precedence: flag, then file,
/// then built-in default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub scheme: Option<SchemeKind>,
    /// Switches to uniform stepping with this step.
    pub tau: Option<f64>,
    pub t_final: Option<f64>,
    pub seed: Option<u64>,
    pub kappa: Option<f64>,
    pub epsilon2: Option<f64>,
    pub truncate: Option<bool>,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) {
        if let Some(s) = &self.scheme {
            config.scheme = s.clone();
        }
        if let Some(tau) = self.tau {
            config.step = StepControl::Uniform { tau };
        }
        if let Some(t) = self.t_final {
            config.t_final = t;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(k) = self.kappa {
            config.model.kappa = k;
        }
        if let Some(e) = self.epsilon2 {
            config.model.epsilon2 = e;
        }
        if let Some(t) = self.truncate {
            config.model.truncate = t;
        }
    }
}

/// A small 1D configuration, handy as a starting point.
pub fn example_config() -> RunConfig {
    RunConfig {
        grid: GridSpec {
            n: vec![128],
            lower: vec![-1.0],
            upper: vec![1.0],
        },
        model: ModelParams::new(0.01),
        scheme: "efrk33".parse().expect("builtin scheme"),
        step: StepControl::Uniform { tau: 1e-3 },
        t_final: 0.1,
        snapshots: vec![0.05],
        seed: 0,
        initial: InitialCondition::SineSum {
            amplitude: 0.1,
            modes: vec![3.0, 5.0],
        },
        reference: None,
    }
}
