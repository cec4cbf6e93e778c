//! Drift of every scheme away from a near-equilibrium `tanh` profile.

use std::path::Path;

use anyhow::Result;
use efrk::driver::{InitialCondition, RunConfig, RunOutput, StepControl};
use efrk::{ModelParams, SchemeKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{periodic_box, run_checked};
use crate::commands::{Manifest, SERIES};
use crate::io::{create_dir, fmt_f64, write_csv, write_series};
use crate::exit_code;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriumStudy {
    pub schemes: Vec<String>,
    pub n: usize,
    pub model: ModelParams,
    pub tau: f64,
    /// Step used for Lie–Trotter instead of `tau`.
    pub tau_lie_trotter: f64,
    pub t_final: f64,
    pub radius: f64,
}

impl Default for EquilibriumStudy {
    fn default() -> Self {
        Self {
            schemes: SchemeKind::all().iter().map(SchemeKind::id).collect(),
            n: 2048,
            model: ModelParams::new(4e-4).with_kappa(0.0),
            tau: 5e-4,
            tau_lie_trotter: 1e-4,
            t_final: 0.02,
            radius: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumRow {
    pub scheme: String,
    pub tau: f64,
    pub steps: usize,
    /// `max |u(T) − u₀|`, NaN after an abort.
    pub drift_linf: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub status: String,
}

impl EquilibriumRow {
    pub fn energy_change(&self) -> f64 {
        self.energy_final - self.energy_initial
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub study: EquilibriumStudy,
    pub rows: Vec<EquilibriumRow>,
    outputs: Vec<Option<RunOutput>>,
}

impl EquilibriumReport {
    pub fn row(&self, scheme: &str) -> Option<&EquilibriumRow> {
        self.rows.iter().find(|r| r.scheme == scheme)
    }
}

impl EquilibriumStudy {
    pub fn config(&self, scheme: SchemeKind) -> RunConfig {
        let tau = if scheme == SchemeKind::LieTrotter {
            self.tau_lie_trotter
        } else {
            self.tau
        };
        RunConfig {
            grid: periodic_box(1, self.n, -1.0, 1.0),
            model: self.model,
            scheme,
            step: StepControl::Uniform { tau },
            t_final: self.t_final,
            snapshots: vec![],
            seed: 0,
            initial: InitialCondition::Tanh {
                radius: self.radius,
                center: None,
            },
            reference: None,
        }
    }

    pub fn run(&self) -> Result<EquilibriumReport> {
        let schemes = self
            .schemes
            .iter()
            .map(|s| Ok(s.parse()?))
            .collect::<Result<Vec<SchemeKind>>>()?;
        for s in &schemes {
            self.config(s.clone()).validate()?;
        }
        let results: Vec<(EquilibriumRow, Option<RunOutput>)> = schemes
            .par_iter()
            .map(|s| {
                let config = self.config(s.clone());
                let tau = config.step.base_tau();
                match run_checked(&config) {
                    Ok(out) => {
                        let (grid, _) = config.validate().expect("validated above");
                        let u0 = config.initial.sample(&grid, &config.model, config.seed);
                        let row = EquilibriumRow {
                            scheme: s.id(),
                            tau,
                            steps: out.series.len(),
                            drift_linf: out.final_state.u.max_abs_diff(&u0).expect("same grid"),
                            energy_initial: out.initial.energy,
                            energy_final: out.series.last().map_or(out.initial.energy, |r| r.energy),
                            status: "ok".into(),
                        };
                        Ok((row, Some(out)))
                    }
                    Err(e) if exit_code(&e) == crate::EXIT_ABORT => Ok((
                        EquilibriumRow {
                            scheme: s.id(),
                            tau,
                            steps: 0,
                            drift_linf: f64::NAN,
                            energy_initial: f64::NAN,
                            energy_final: f64::NAN,
                            status: e.to_string(),
                        },
                        None,
                    )),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()?;
        let (rows, outputs) = results.into_iter().unzip();
        Ok(EquilibriumReport {
            study: self.clone(),
            rows,
            outputs,
        })
    }
}

impl EquilibriumReport {
    /// `summary.csv` plus, per scheme, `<scheme>/series.csv` and
    /// `<scheme>/profile.csv` with columns `x, u0, u_final, abs_error`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        write_csv(
            &dir.join("summary.csv"),
            &["scheme", "tau", "steps", "drift_linf", "energy_initial", "energy_final", "status"],
            self.rows.iter().map(|r| {
                vec![
                    r.scheme.clone(),
                    fmt_f64(r.tau),
                    r.steps.to_string(),
                    fmt_f64(r.drift_linf),
                    fmt_f64(r.energy_initial),
                    fmt_f64(r.energy_final),
                    r.status.clone(),
                ]
            }),
        )?;
        let mut files = vec!["summary.csv".to_string()];
        for (row, out) in self.rows.iter().zip(&self.outputs) {
            let Some(out) = out else { continue };
            let sub = dir.join(&row.scheme);
            create_dir(&sub)?;
            write_series(&sub.join(SERIES), out.records())?;
            let config = self.study.config(row.scheme.parse()?);
            let (grid, _) = config.validate()?;
            let u0 = config.initial.sample(&grid, &config.model, config.seed);
            let u = &out.final_state.u;
            write_csv(
                &sub.join("profile.csv"),
                &["x", "u0", "u_final", "abs_error"],
                (0..grid.len()).map(|j| {
                    let (a, b) = (u0.values()[j], u.values()[j]);
                    vec![fmt_f64(grid.point(j)[0]), fmt_f64(a), fmt_f64(b), fmt_f64((b - a).abs())]
                }),
            )?;
            files.push(format!("{}/{SERIES}", row.scheme));
            files.push(format!("{}/profile.csv", row.scheme));
        }
        let mut m = Manifest::new("equilibrium", &self.study)?;
        files.push("manifest.json".into());
        m.outputs = files;
        m.write(dir)
    }
}
