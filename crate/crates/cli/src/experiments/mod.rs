//! Canned numerical experiments. Each study is a serializable parameter set
//! with full-scale defaults, a `run` method returning a report, and a
//! `write` method laying the report out as CSV files plus a manifest.

pub mod adapt;
pub mod coarsen;
pub mod converge;
pub mod equilibrium;
pub mod stability;

use std::f64::consts::PI;

use anyhow::Result;
use efrk::driver::{run, DriverError, GridSpec, RunConfig, RunOutput};
use serde::Serialize;

use crate::NumericalAbort;

/// Per-run digest of a time series.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub scheme: String,
    pub steps: usize,
    pub t_final: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    /// Largest single-step energy increase relative to `|E|` (≤ 0 when
    /// the energy never rises).
    pub max_energy_rise: f64,
    /// Largest `|mass(uⁿ) − mass(u⁰)|`.
    pub max_mass_drift: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub wall_s: f64,
}

impl RunSummary {
    pub fn of(label: &str, config: &RunConfig, out: &RunOutput) -> Self {
        let records: Vec<_> = out.records().collect();
        let m0 = out.initial.mass;
        let max_energy_rise = records
            .windows(2)
            .map(|w| (w[1].energy - w[0].energy) / w[0].energy.abs().max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max);
        let taus = out.series.iter().map(|r| r.tau);
        Self {
            label: label.into(),
            scheme: config.scheme.id(),
            steps: out.series.len(),
            t_final: out.final_state.t,
            energy_initial: out.initial.energy,
            energy_final: records.last().map_or(out.initial.energy, |r| r.energy),
            max_energy_rise,
            max_mass_drift: records.iter().map(|r| (r.mass - m0).abs()).fold(0.0, f64::max),
            tau_min: taus.clone().fold(f64::INFINITY, f64::min),
            tau_max: taus.fold(0.0, f64::max),
            wall_s: records.last().map_or(0.0, |r| r.cpu_s),
        }
    }

    /// Every step keeps `E_{n+1} ≤ E_n + slack·|E_n|`.
    pub fn energy_non_increasing(&self, slack: f64) -> bool {
        self.max_energy_rise <= slack
    }
}

pub const SUMMARY_HEADER: [&str; 12] = [
    "label",
    "scheme",
    "steps",
    "t_final",
    "energy_initial",
    "energy_final",
    "max_energy_rise",
    "max_mass_drift",
    "tau_min",
    "tau_max",
    "wall_s",
    "status",
];

pub fn summary_row(s: &RunSummary, status: &str) -> Vec<String> {
    use crate::io::fmt_f64;
    vec![
        s.label.clone(),
        s.scheme.clone(),
        s.steps.to_string(),
        fmt_f64(s.t_final),
        fmt_f64(s.energy_initial),
        fmt_f64(s.energy_final),
        fmt_f64(s.max_energy_rise),
        fmt_f64(s.max_mass_drift),
        fmt_f64(s.tau_min),
        fmt_f64(s.tau_max),
        fmt_f64(s.wall_s),
        status.into(),
    ]
}

/// Runs a configuration, turning a numerical abort into [`NumericalAbort`].
pub fn run_checked(config: &RunConfig) -> Result<RunOutput> {
    match run(config) {
        Ok(out) => Ok(out),
        Err(DriverError::Abort { t, step, stage, .. }) => Err(NumericalAbort { t, step, stage }.into()),
        Err(e) => Err(e.into()),
    }
}

/// `(−π, π)^d` with `n` points per axis.
pub fn periodic_box(dim: usize, n: usize, lower: f64, upper: f64) -> GridSpec {
    GridSpec {
        n: vec![n; dim],
        lower: vec![lower; dim],
        upper: vec![upper; dim],
    }
}

pub fn centered_square(n: usize) -> GridSpec {
    periodic_box(2, n, -PI, PI)
}

/// Directory-safe label for a scheme run with an optional step override.
pub fn run_label(scheme: &efrk::SchemeKind, tau: Option<f64>) -> String {
    match tau {
        Some(t) => format!("{}_tau{t:e}", scheme.id()),
        None => scheme.id(),
    }
}
