//! Temporal and spatial convergence studies on the 1D problem
//! `u₀ = 0.1 (sin 3πx + sin 5πx)` on `(−1, 1)`.

use std::path::Path;

use anyhow::{ensure, Result};
use efrk::diagnostics::{error_l2, restrict};
use efrk::driver::{reference_solution, InitialCondition, RunConfig, StepControl};
use efrk::{ModelParams, SchemeKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{periodic_box, run_checked};
use crate::commands::Manifest;
use crate::io::{create_dir, fmt_f64, write_csv};

pub fn sine_config(n: usize, model: ModelParams, scheme: SchemeKind, tau: f64, t_final: f64) -> RunConfig {
    RunConfig {
        grid: periodic_box(1, n, -1.0, 1.0),
        model,
        scheme,
        step: StepControl::Uniform { tau },
        t_final,
        snapshots: vec![],
        seed: 0,
        initial: InitialCondition::SineSum {
            amplitude: 0.1,
            modes: vec![3.0, 5.0],
        },
        reference: None,
    }
}

/// Errors at `τ = δ/2^k` against a fine-step reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeStudy {
    pub schemes: Vec<String>,
    pub delta: f64,
    pub k_min: u32,
    pub k_max: u32,
    pub n: usize,
    pub model: ModelParams,
    pub t_final: f64,
    /// Reference step `δ / 2^(k_max + refine)`.
    pub refine: u32,
}

impl Default for TimeStudy {
    fn default() -> Self {
        Self {
            schemes: vec!["efrk11".into(), "efrk22".into(), "efrk33".into()],
            delta: 1e-2,
            k_min: 6,
            k_max: 11,
            n: 512,
            model: ModelParams::new(0.01),
            t_final: 0.1,
            refine: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeRow {
    pub scheme: String,
    pub k: u32,
    pub tau: f64,
    pub error_l2: f64,
    /// `error_l2 / √|Ω|`.
    pub error_rms: f64,
    /// `log₂(e_{k−1} / e_k)`; absent on the coarsest row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TimeReport {
    pub study: TimeStudy,
    pub rows: Vec<TimeRow>,
}

impl TimeReport {
    pub fn errors(&self, scheme: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.scheme == scheme).map(|r| r.error_l2).collect()
    }

    pub fn orders(&self, scheme: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.scheme == scheme).filter_map(|r| r.order).collect()
    }
}

pub const TIME_HEADER: [&str; 6] = ["scheme", "k", "tau", "error_l2", "error_rms", "order"];

impl TimeStudy {
    fn validate(&self) -> Result<Vec<SchemeKind>> {
        ensure!(self.delta.is_finite() && self.delta > 0.0, "delta must be positive");
        ensure!(self.k_min <= self.k_max && self.k_max <= 14, "k range must satisfy k_min ≤ k_max ≤ 14");
        ensure!(self.refine >= 4, "refine must be at least 4");
        self.schemes.iter().map(|s| Ok(s.parse()?)).collect()
    }

    pub fn run(&self) -> Result<TimeReport> {
        let schemes = self.validate()?;
        let finest = self.delta / 2f64.powi(self.k_max as i32);
        let base = sine_config(self.n, self.model, schemes[0].clone(), finest, self.t_final);
        let (grid, _) = base.validate()?;
        let reference = reference_solution(&base, self.refine)?;
        let rms = grid.volume().sqrt();
        let jobs: Vec<(SchemeKind, u32)> = schemes
            .iter()
            .flat_map(|s| (self.k_min..=self.k_max).map(move |k| (s.clone(), k)))
            .collect();
        let errors = jobs
            .par_iter()
            .map(|(s, k)| {
                let tau = self.delta / 2f64.powi(*k as i32);
                let out = run_checked(&sine_config(self.n, self.model, s.clone(), tau, self.t_final))?;
                Ok(error_l2(&out.final_state.u, &reference)?)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut rows: Vec<TimeRow> = Vec::with_capacity(jobs.len());
        for ((s, k), e) in jobs.iter().zip(errors) {
            let order = match rows.last() {
                Some(prev) if prev.scheme == s.id() => Some((prev.error_l2 / e).log2()),
                _ => None,
            };
            rows.push(TimeRow {
                scheme: s.id(),
                k: *k,
                tau: self.delta / 2f64.powi(*k as i32),
                error_l2: e,
                error_rms: e / rms,
                order,
            });
        }
        Ok(TimeReport {
            study: self.clone(),
            rows,
        })
    }
}

impl TimeReport {
    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        write_csv(
            &dir.join("convergence_time.csv"),
            &TIME_HEADER,
            self.rows.iter().map(|r| {
                vec![
                    r.scheme.clone(),
                    r.k.to_string(),
                    fmt_f64(r.tau),
                    fmt_f64(r.error_l2),
                    fmt_f64(r.error_rms),
                    r.order.map(fmt_f64).unwrap_or_default(),
                ]
            }),
        )?;
        let mut m = Manifest::new("converge", &self.study)?;
        m.outputs = vec!["convergence_time.csv".into(), "manifest.json".into()];
        m.write(dir)
    }
}

/// Errors against a fine-grid reference at a fixed small step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpaceStudy {
    pub scheme: String,
    pub ns: Vec<usize>,
    pub n_reference: usize,
    pub tau: f64,
    pub model: ModelParams,
    pub t_final: f64,
}

impl Default for SpaceStudy {
    fn default() -> Self {
        Self {
            scheme: "efrk33".into(),
            ns: (2..=10).map(|p| 1usize << p).collect(),
            n_reference: 2048,
            tau: 1e-2 / 4096.0,
            model: ModelParams::new(0.01),
            t_final: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceRow {
    pub n: usize,
    pub error_l2: f64,
    pub error_rms: f64,
}

#[derive(Debug, Clone)]
pub struct SpaceReport {
    pub study: SpaceStudy,
    pub rows: Vec<SpaceRow>,
}

impl SpaceReport {
    pub fn error_at(&self, n: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.n == n).map(|r| r.error_l2)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        write_csv(
            &dir.join("convergence_space.csv"),
            &["n", "error_l2", "error_rms"],
            self.rows
                .iter()
                .map(|r| vec![r.n.to_string(), fmt_f64(r.error_l2), fmt_f64(r.error_rms)]),
        )?;
        let mut m = Manifest::new("converge --space", &self.study)?;
        m.outputs = vec!["convergence_space.csv".into(), "manifest.json".into()];
        m.write(dir)
    }
}

impl SpaceStudy {
    pub fn run(&self) -> Result<SpaceReport> {
        let scheme: SchemeKind = self.scheme.parse()?;
        ensure!(
            self.ns.iter().all(|&n| n < self.n_reference && self.n_reference % n == 0),
            "every n must divide n_reference and be smaller"
        );
        let config = |n: usize| sine_config(n, self.model, scheme.clone(), self.tau, self.t_final);
        let mut all: Vec<usize> = self.ns.clone();
        all.push(self.n_reference);
        let finals = all
            .par_iter()
            .map(|&n| Ok(run_checked(&config(n))?.final_state.u))
            .collect::<Result<Vec<_>>>()?;
        let (reference, coarse) = finals.split_last().expect("reference run present");
        let rows = self
            .ns
            .iter()
            .zip(coarse)
            .map(|(&n, u)| {
                let e = error_l2(u, &restrict(reference, u.grid())?)?;
                Ok(SpaceRow {
                    n,
                    error_l2: e,
                    error_rms: e / u.grid().volume().sqrt(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SpaceReport {
            study: self.clone(),
            rows,
        })
    }
}
