//! Linear stability boundaries and energy-matrix scans.

use std::path::Path;

use anyhow::{ensure, Result};
use efrk::schemes::{builtin, BuiltinTableau};
use efrk::stability::{
    max_amplification, psd_scan, real_axis_limit, stability_boundary, stable_area, Polyline, PsdScan, Window,
};
use serde::{Deserialize, Serialize};

use crate::commands::Manifest;
use crate::io::{create_dir, fmt_f64, write_csv};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityStudy {
    pub stages: Vec<usize>,
    pub thetas: Vec<f64>,
    pub window: Window,
    pub resolution: usize,
    pub psd_samples: usize,
    pub z_max: f64,
}

impl Default for StabilityStudy {
    fn default() -> Self {
        Self {
            stages: vec![1, 2, 3],
            thetas: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            window: Window::default(),
            resolution: 400,
            psd_samples: 1000,
            z_max: 1e8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    pub stages: usize,
    pub theta: f64,
    pub polylines: Vec<Polyline>,
    /// Largest `|Φ|` over the left half of the window.
    pub max_left_half: f64,
    pub stable_area: f64,
    /// Where `|Φ| = 1` on the negative real axis within the window.
    pub real_axis_limit: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub study: StabilityStudy,
    pub curves: Vec<BoundaryCurve>,
    pub scans: Vec<PsdScan>,
}

pub fn boundary_file(stages: usize, theta: f64) -> String {
    format!("boundary_s{stages}_theta{theta}.csv")
}

impl StabilityStudy {
    pub fn run(&self) -> Result<StabilityReport> {
        ensure!(self.resolution >= 2, "resolution must be at least 2");
        ensure!(self.psd_samples >= 2 && self.z_max > 0.0, "need at least 2 scan samples and z_max > 0");
        let mut curves = Vec::new();
        for &s in &self.stages {
            for &theta in &self.thetas {
                let polylines = stability_boundary(s, theta, &self.window, self.resolution)?;
                let left = self.window.left_half();
                curves.push(BoundaryCurve {
                    stages: s,
                    theta,
                    polylines,
                    max_left_half: max_amplification(s, theta, &left, self.resolution)?,
                    stable_area: stable_area(s, theta, &self.window, self.resolution)?,
                    real_axis_limit: real_axis_limit(s, theta, self.window.re_min, -1e-6)?,
                });
            }
        }
        let scans = BuiltinTableau::ALL
            .iter()
            .map(|&b| psd_scan(&builtin(b), self.psd_samples, self.z_max))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(StabilityReport {
            study: self.clone(),
            curves,
            scans,
        })
    }
}

impl StabilityReport {
    pub fn curve(&self, stages: usize, theta: f64) -> Option<&BoundaryCurve> {
        self.curves.iter().find(|c| c.stages == stages && c.theta == theta)
    }

    pub fn scan(&self, tableau: &str) -> Option<&PsdScan> {
        self.scans.iter().find(|s| s.tableau.eq_ignore_ascii_case(tableau))
    }

    /// One `boundary_s{s}_theta{θ}.csv` per pair with columns
    /// `curve, re, im`; `amplification.csv` with the per-pair summary; and
    /// `psd_scan.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        let mut files = Vec::new();
        for c in &self.curves {
            let name = boundary_file(c.stages, c.theta);
            write_csv(
                &dir.join(&name),
                &["curve", "re", "im"],
                c.polylines.iter().enumerate().flat_map(|(k, line)| {
                    line.iter()
                        .map(|&(re, im)| vec![k.to_string(), fmt_f64(re), fmt_f64(im)])
                        .collect::<Vec<_>>()
                }),
            )?;
            files.push(name);
        }
        write_csv(
            &dir.join("amplification.csv"),
            &["stages", "theta", "max_left_half", "stable_area", "real_axis_limit"],
            self.curves.iter().map(|c| {
                vec![
                    c.stages.to_string(),
                    fmt_f64(c.theta),
                    fmt_f64(c.max_left_half),
                    fmt_f64(c.stable_area),
                    c.real_axis_limit.map(fmt_f64).unwrap_or_default(),
                ]
            }),
        )?;
        write_csv(
            &dir.join("psd_scan.csv"),
            &["tableau", "samples", "z_max", "min_value", "min_label", "min_z"],
            self.scans.iter().map(|s| {
                vec![
                    s.tableau.clone(),
                    s.samples.to_string(),
                    fmt_f64(s.z_max),
                    fmt_f64(s.min_value),
                    s.min_label.clone(),
                    fmt_f64(s.min_z),
                ]
            }),
        )?;
        files.extend(["amplification.csv".into(), "psd_scan.csv".into(), "manifest.json".into()]);
        let mut m = Manifest::new("stability", &self.study)?;
        m.outputs = files;
        m.write(dir)
    }
}
