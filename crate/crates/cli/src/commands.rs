//! The `run` command and the output layout shared by all commands.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use efrk::driver::{run_from, DriverError, RunConfig, RunOutput, RunState};
use serde::Serialize;

use crate::io::{self, create_dir, snapshot_name, write_json, write_series, write_snapshot};
use crate::NumericalAbort;

pub const MANIFEST: &str = "manifest.json";
pub const SERIES: &str = "series.csv";
pub const FINAL_SNAPSHOT: &str = "final.efrksnap";

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Aborted,
}

#[derive(Debug, Clone, Serialize)]
pub struct AbortInfo {
    pub t: f64,
    pub step: usize,
    pub stage: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RestartInfo {
    pub path: String,
    pub t: f64,
}

/// Echo of everything needed to rerun a command.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub status: Status,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restart: Option<RestartInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort: Option<AbortInfo>,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            status: Status::Ok,
            config: serde_json::to_value(config)?,
            restart: None,
            abort: None,
            warnings: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(MANIFEST), self)
    }
}

/// Writes `series.csv`, the requested snapshots and `final.efrksnap`;
/// returns the file names relative to `dir`.
pub fn write_run_outputs(dir: &Path, out: &RunOutput, with_final: bool) -> Result<Vec<String>> {
    create_dir(dir)?;
    let mut files = vec![SERIES.to_string()];
    write_series(&dir.join(SERIES), out.records())?;
    for (i, snap) in out.snapshots.iter().enumerate() {
        let name = snapshot_name(i);
        write_snapshot(&dir.join(&name), &snap.field, snap.t)?;
        files.push(name);
    }
    if with_final {
        write_snapshot(&dir.join(FINAL_SNAPSHOT), &out.final_state.u, out.final_state.t)?;
        files.push(FINAL_SNAPSHOT.into());
    }
    Ok(files)
}

/// Runs `config`, optionally continuing from a snapshot, and writes the
/// outputs to `out`. A numerical abort still writes the partial series and
/// the manifest before failing with [`NumericalAbort`].
pub fn execute_run(config: &RunConfig, out: &Path, restart: Option<&Path>) -> Result<RunOutput> {
    let (grid, warnings) = config.validate()?;
    let state = match restart {
        None => efrk::driver::initial_state(config, &grid),
        Some(path) => {
            let (u, t) = io::read_snapshot(path)?;
            ensure!(u.grid() == &grid, "restart snapshot {} was written on a different grid", path.display());
            ensure!(t < config.t_final, "restart time {t} is not before t_final = {}", config.t_final);
            RunState {
                t,
                step: 0,
                u,
                previous: None,
            }
        }
    };
    create_dir(out)?;
    let mut manifest = Manifest::new("run", config)?;
    manifest.warnings = warnings;
    manifest.restart = restart.map(|p| RestartInfo {
        path: p.display().to_string(),
        t: state.t,
    });
    match run_from(config, state) {
        Ok(result) => {
            manifest.outputs = write_run_outputs(out, &result, true)?;
            manifest.outputs.push(MANIFEST.into());
            manifest.write(out)?;
            Ok(result)
        }
        Err(DriverError::Abort { t, step, stage, partial }) => {
            manifest.status = Status::Aborted;
            manifest.abort = Some(AbortInfo { t, step, stage });
            manifest.outputs = write_run_outputs(out, &partial, false)?;
            manifest.outputs.push(MANIFEST.into());
            manifest.write(out)?;
            Err(NumericalAbort { t, step, stage }).with_context(|| format!("partial output written to {}", out.display()))
        }
        Err(e) => Err(e.into()),
    }
}

/// Output directory: the flag, else `default`.
pub fn out_dir(flag: Option<PathBuf>, default: &str) -> PathBuf {
    flag.unwrap_or_else(|| PathBuf::from(default))
}

/// Parses a scheme list such as `efrk11,efrk33@1e-4`; the optional `@τ`
/// overrides the step size for that entry.
pub fn parse_scheme_list(spec: &str) -> Result<Vec<(efrk::SchemeKind, Option<f64>)>> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, tau) = match item.split_once('@') {
            Some((n, t)) => {
                let tau: f64 = t.parse().with_context(|| format!("bad step size in {item:?}"))?;
                ensure!(tau.is_finite() && tau > 0.0, "step size in {item:?} must be positive");
                (n, Some(tau))
            }
            None => (item, None),
        };
        out.push((name.parse()?, tau));
    }
    if out.is_empty() {
        bail!("empty scheme list");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_lists() {
        let v = parse_scheme_list("efrk11@6.25e-5, ifrk33,strang").unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v[0].0.id(), "efrk11");
        assert_eq!(v[0].1, Some(6.25e-5));
        assert_eq!(v[1].1, None);
        assert!(parse_scheme_list("efrk44").is_err());
        assert!(parse_scheme_list("efrk11@-1").is_err());
        assert!(parse_scheme_list(" , ").is_err());
    }
}
