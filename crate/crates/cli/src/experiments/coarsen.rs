//! 2D coarsening from random data: fixed-step scheme comparisons and the
//! adaptive EFRK/IFRK comparison, both optionally against a fine-step
//! `κ = 0` EFRK(3,3) reference.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{Context, Result};
use efrk::diagnostics::error_l2;
use efrk::driver::{AdaptiveParams, GridSpec, InitialCondition, RunConfig, RunOutput, StepControl};
use efrk::schemes::BuiltinTableau;
use efrk::{ModelParams, SchemeKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{centered_square, periodic_box, run_checked, run_label, summary_row, RunSummary, SUMMARY_HEADER};
use crate::commands::{parse_scheme_list, write_run_outputs, Manifest};
use crate::io::{create_dir, fmt_f64, write_csv};

/// Independent runs sharing a grid and initial data, plus an optional
/// reference evaluated at the common snapshot times.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub runs: Vec<(String, RunConfig)>,
    pub reference: Option<RunConfig>,
}

#[derive(Debug, Clone)]
pub struct EnsembleReport {
    pub summaries: Vec<RunSummary>,
    pub outputs: Vec<RunOutput>,
    pub reference: Option<RunOutput>,
    /// Per run: `(t, ℓ² difference from the reference)` at each snapshot.
    pub snapshot_errors: Vec<Vec<(f64, f64)>>,
}

impl Ensemble {
    pub fn run(&self) -> Result<EnsembleReport> {
        for (label, c) in &self.runs {
            c.validate().with_context(|| format!("run {label}"))?;
        }
        if let Some(r) = &self.reference {
            r.validate().context("reference run")?;
        }
        let mut jobs: Vec<&RunConfig> = self.runs.iter().map(|(_, c)| c).collect();
        jobs.extend(self.reference.iter());
        let mut outputs = jobs.par_iter().map(|c| run_checked(c)).collect::<Result<Vec<_>>>()?;
        let reference = self.reference.as_ref().map(|_| outputs.pop().expect("reference output"));
        let summaries = self
            .runs
            .iter()
            .zip(&outputs)
            .map(|((label, c), out)| RunSummary::of(label, c, out))
            .collect();
        let snapshot_errors = outputs
            .iter()
            .map(|out| match &reference {
                Some(r) => out
                    .snapshots
                    .iter()
                    .zip(&r.snapshots)
                    .map(|(a, b)| Ok((a.t, error_l2(&a.field, &b.field)?)))
                    .collect::<Result<Vec<_>>>(),
                None => Ok(Vec::new()),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EnsembleReport {
            summaries,
            outputs,
            reference,
            snapshot_errors,
        })
    }
}

const REFERENCE_LABEL: &str = "reference";

impl EnsembleReport {
    pub fn summary(&self, label: &str) -> Option<&RunSummary> {
        self.summaries.iter().find(|s| s.label == label)
    }

    pub fn output(&self, label: &str) -> Option<&RunOutput> {
        self.summaries.iter().position(|s| s.label == label).map(|i| &self.outputs[i])
    }

    /// `summary.csv`, `snapshot_errors.csv` when a reference exists, and one
    /// directory per run with its series and snapshots.
    pub fn write(&self, dir: &Path, command: &str, study: &impl Serialize) -> Result<()> {
        create_dir(dir)?;
        let mut files = vec!["summary.csv".to_string()];
        write_csv(
            &dir.join("summary.csv"),
            &SUMMARY_HEADER,
            self.summaries.iter().map(|s| summary_row(s, "ok")),
        )?;
        for (s, out) in self.summaries.iter().zip(&self.outputs) {
            for f in write_run_outputs(&dir.join(&s.label), out, true)? {
                files.push(format!("{}/{f}", s.label));
            }
        }
        if let Some(r) = &self.reference {
            for f in write_run_outputs(&dir.join(REFERENCE_LABEL), r, true)? {
                files.push(format!("{REFERENCE_LABEL}/{f}"));
            }
            write_csv(
                &dir.join("snapshot_errors.csv"),
                &["label", "t", "error_l2"],
                self.summaries.iter().zip(&self.snapshot_errors).flat_map(|(s, errs)| {
                    errs.iter()
                        .map(|(t, e)| vec![s.label.clone(), fmt_f64(*t), fmt_f64(*e)])
                        .collect::<Vec<_>>()
                }),
            )?;
            files.push("snapshot_errors.csv".into());
        }
        files.push("manifest.json".into());
        let mut m = Manifest::new(command, study)?;
        m.outputs = files;
        m.write(dir)
    }
}

/// The reference paired with `config`: EFRK(3,3), `κ = 0`, uniform `tau`.
pub fn snapshot_reference(config: &RunConfig, tau: f64) -> RunConfig {
    RunConfig {
        model: config.model.with_kappa(0.0),
        scheme: SchemeKind::efrk(BuiltinTableau::Rk33),
        step: StepControl::Uniform { tau },
        reference: None,
        ..config.clone()
    }
}

fn clip_snapshots(times: &[f64], t_final: f64) -> Vec<f64> {
    times.iter().copied().filter(|&t| t <= t_final).collect()
}

fn random_config(grid: GridSpec, model: ModelParams, scheme: SchemeKind, step: StepControl, t_final: f64, snapshots: &[f64], seed: u64) -> RunConfig {
    RunConfig {
        grid,
        model,
        scheme,
        step,
        t_final,
        snapshots: clip_snapshots(snapshots, t_final),
        seed,
        initial: InitialCondition::Random { low: -0.5, high: 0.5 },
        reference: None,
    }
}

/// Fixed-step coarsening on `(−π, π)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoarsenStudy {
    /// Scheme names, each optionally with `@τ` to override `tau`.
    pub schemes: Vec<String>,
    pub n: usize,
    pub model: ModelParams,
    pub tau: f64,
    pub t_final: f64,
    pub snapshots: Vec<f64>,
    pub seed: u64,
    pub reference_tau: Option<f64>,
}

impl Default for CoarsenStudy {
    fn default() -> Self {
        Self {
            schemes: vec!["efrk11".into(), "efrk22".into(), "efrk33".into(), "ifrk33".into()],
            n: 128,
            model: ModelParams::new(0.0025),
            tau: 1e-3,
            t_final: 100.0,
            snapshots: vec![1.0, 10.0, 50.0, 100.0],
            seed: 1,
            reference_tau: None,
        }
    }
}

impl CoarsenStudy {
    pub fn ensemble(&self) -> Result<Ensemble> {
        let mut runs = Vec::new();
        for item in &self.schemes {
            for (scheme, tau) in parse_scheme_list(item)? {
                let label = run_label(&scheme, tau);
                let step = StepControl::Uniform {
                    tau: tau.unwrap_or(self.tau),
                };
                runs.push((label, random_config(centered_square(self.n), self.model, scheme, step, self.t_final, &self.snapshots, self.seed)));
            }
        }
        let reference = match (self.reference_tau, runs.first()) {
            (Some(tau), Some((_, c))) => Some(snapshot_reference(c, tau)),
            _ => None,
        };
        Ok(Ensemble { runs, reference })
    }

    pub fn run(&self) -> Result<EnsembleReport> {
        self.ensemble()?.run()
    }
}

/// Adaptive-step comparison on `(0, 2π)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareStudy {
    pub schemes: Vec<String>,
    pub n: usize,
    pub model: ModelParams,
    pub adaptive: AdaptiveParams,
    pub t_final: f64,
    pub snapshots: Vec<f64>,
    pub seed: u64,
    pub reference_tau: Option<f64>,
}

impl Default for CompareStudy {
    fn default() -> Self {
        Self {
            schemes: vec!["efrk22".into(), "efrk33".into(), "ifrk33".into()],
            n: 128,
            model: ModelParams::new(0.002),
            adaptive: AdaptiveParams {
                alpha: 100.0,
                tau_min: 1e-5,
                tau_max: 1e-2,
            },
            t_final: 50.0,
            snapshots: vec![1.0, 4.0, 10.0, 30.0, 50.0],
            seed: 1,
            reference_tau: None,
        }
    }
}

impl CompareStudy {
    pub fn ensemble(&self) -> Result<Ensemble> {
        let grid = periodic_box(2, self.n, 0.0, 2.0 * PI);
        let runs = self
            .schemes
            .iter()
            .map(|s| {
                let scheme: SchemeKind = s.parse()?;
                let step = StepControl::Adaptive(self.adaptive);
                Ok((scheme.id(), random_config(grid.clone(), self.model, scheme, step, self.t_final, &self.snapshots, self.seed)))
            })
            .collect::<Result<Vec<_>>>()?;
        let reference = match (self.reference_tau, runs.first()) {
            (Some(tau), Some((_, c))) => Some(snapshot_reference(c, tau)),
            _ => None,
        };
        Ok(Ensemble { runs, reference })
    }

    pub fn run(&self) -> Result<EnsembleReport> {
        self.ensemble()?.run()
    }
}
