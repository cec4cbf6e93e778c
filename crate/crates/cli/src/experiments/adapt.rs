//! Energy-adaptive stepping against small and large uniform steps.

use std::path::Path;

use anyhow::{ensure, Result};
use efrk::diagnostics::error_l2;
use efrk::driver::{AdaptiveParams, StepControl};
use efrk::ModelParams;
use serde::{Deserialize, Serialize};

use super::coarsen::{Ensemble, EnsembleReport};
use super::centered_square;
use crate::io::{fmt_f64, write_csv};

pub const ADAPTIVE: &str = "adaptive";
pub const UNIFORM_SMALL: &str = "uniform-small";
pub const UNIFORM_LARGE: &str = "uniform-large";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptStudy {
    pub scheme: String,
    pub n: usize,
    pub model: ModelParams,
    pub adaptive: AdaptiveParams,
    pub t_final: f64,
    pub snapshots: Vec<f64>,
    pub seed: u64,
    /// Also run uniform `τ = tau_max`.
    pub include_large: bool,
}

impl Default for AdaptStudy {
    fn default() -> Self {
        Self {
            scheme: "efrk33".into(),
            n: 128,
            model: ModelParams::new(0.0025),
            adaptive: AdaptiveParams {
                alpha: 100.0,
                tau_min: 1e-5,
                tau_max: 1e-2,
            },
            t_final: 100.0,
            snapshots: vec![1.0, 10.0, 50.0, 100.0],
            seed: 1,
            include_large: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdaptReport {
    pub study: AdaptStudy,
    pub runs: EnsembleReport,
    /// Uniform-small steps divided by adaptive steps.
    pub step_ratio: f64,
    /// Final-state ℓ² differences from the uniform-small run.
    pub final_diff_adaptive: f64,
    pub final_diff_large: Option<f64>,
    /// Every adaptive step lies in `[τ_min, τ_max]`, apart from steps
    /// shortened to land on an output time.
    pub tau_within_bounds: bool,
}

impl AdaptStudy {
    pub fn run(&self) -> Result<AdaptReport> {
        let a = self.adaptive;
        ensure!(a.tau_min > 0.0 && a.tau_min <= a.tau_max, "need 0 < tau_min ≤ tau_max");
        let base = super::coarsen::CoarsenStudy {
            schemes: vec![self.scheme.clone()],
            n: self.n,
            model: self.model,
            tau: a.tau_min,
            t_final: self.t_final,
            snapshots: self.snapshots.clone(),
            seed: self.seed,
            reference_tau: None,
        };
        let template = base.ensemble()?.runs.remove(0).1;
        debug_assert_eq!(template.grid, centered_square(self.n));
        let mut runs = vec![
            (
                ADAPTIVE.to_string(),
                efrk::RunConfig {
                    step: StepControl::Adaptive(a),
                    ..template.clone()
                },
            ),
            (UNIFORM_SMALL.to_string(), template.clone()),
        ];
        if self.include_large {
            runs.push((
                UNIFORM_LARGE.to_string(),
                efrk::RunConfig {
                    step: StepControl::Uniform { tau: a.tau_max },
                    ..template
                },
            ));
        }
        let report = Ensemble { runs, reference: None }.run()?;
        let adaptive = report.output(ADAPTIVE).expect("adaptive run");
        let small = report.output(UNIFORM_SMALL).expect("uniform run");
        let landing: Vec<f64> = self.snapshots.iter().copied().chain([self.t_final]).collect();
        let tau_within_bounds = adaptive.series.iter().all(|r| {
            let inside = r.tau >= a.tau_min * (1.0 - 1e-12) && r.tau <= a.tau_max * (1.0 + 1e-12);
            let landed = landing.iter().any(|&s| (r.t - s).abs() <= 1e-12 * s.abs().max(1.0));
            inside || (landed && r.tau > 0.0 && r.tau <= a.tau_max)
        });
        let final_diff_adaptive = error_l2(adaptive.final_field(), small.final_field())?;
        let final_diff_large = match report.output(UNIFORM_LARGE) {
            Some(l) => Some(error_l2(l.final_field(), small.final_field())?),
            None => None,
        };
        Ok(AdaptReport {
            study: self.clone(),
            step_ratio: small.series.len() as f64 / adaptive.series.len() as f64,
            final_diff_adaptive,
            final_diff_large,
            tau_within_bounds,
            runs: report,
        })
    }
}

impl AdaptReport {
    /// The ensemble layout plus `comparison.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.runs.write(dir, "adapt", &self.study)?;
        let mut rows = vec![vec![
            ADAPTIVE.to_string(),
            self.runs.summary(ADAPTIVE).map_or(0, |s| s.steps).to_string(),
            fmt_f64(self.final_diff_adaptive),
        ]];
        if let (Some(d), Some(s)) = (self.final_diff_large, self.runs.summary(UNIFORM_LARGE)) {
            rows.push(vec![UNIFORM_LARGE.to_string(), s.steps.to_string(), fmt_f64(d)]);
        }
        write_csv(&dir.join("comparison.csv"), &["label", "steps", "final_diff_l2"], rows)
    }
}
