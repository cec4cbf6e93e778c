//! Energy-stability coefficients and linear stability of EFRK schemes.
//!
//! All operators involved are functions of the single operator `τL_κ`, so
//! everything here is evaluated per eigenvalue at `z = −τℓ ≥ 0`.
//!
//! The stage relations can be rewritten as
//!
//! ```text
//! τ(L_κ u_i + N_κ(u_{i−1})) = Σ_{k=0}^{i} ω_{i,k} u_k = Σ_{j=1}^{i} Δ_{i,j} (u_j − u_{j−1}),
//! ```
//!
//! with `Σ_k ω_{i,k} = 0` whenever the scheme preserves equilibria and
//! `Δ_{i,j} = Σ_{k ≥ j} ω_{i,k}`. The energy decays whenever the entries
//! returned by [`energy_matrix_entries`] are non-negative.

use crate::schemes::{equilibrium_defect_coefficients, ButcherTableau};
use crate::taylor::{phi, phi_complex};
use crate::Complex64;

/// Defect coefficients below this magnitude are round-off in the tableau
/// and are treated as exact zeros.
const DEFECT_SNAP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StabilityError {
    #[error("argument z = {0} must be finite and non-negative")]
    Argument(f64),
    #[error("recurrences are implemented for at most 4 stages, got {0}")]
    TooManyStages(usize),
    #[error("stage count s = {0} must be 1, 2 or 3")]
    StageCount(usize),
    #[error("theta = {0} must lie in [0, 1]")]
    Theta(f64),
    #[error("denominator of the stability function vanishes at z = {0}")]
    Pole(Complex64),
    #[error("denominator underflow in stage {0}")]
    Underflow(usize),
}

/// `ω_{i,k}` and `Δ_{i,j}` at one argument `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaCoefficients {
    pub z: f64,
    /// `omega[i-1][k]` for `k = 0..=i`.
    pub omega: Vec<Vec<f64>>,
    /// `delta[i-1][j-1]` for `j = 1..=i`.
    pub delta: Vec<Vec<f64>>,
}

impl DeltaCoefficients {
    pub fn stages(&self) -> usize {
        self.delta.len()
    }

    /// `Δ_{i,j}`, 1-based, zero above the diagonal.
    pub fn delta(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.delta[i - 1][j - 1]
        }
    }

    /// `ω_{i,k}`, 1-based in `i`, 0-based in `k`.
    pub fn omega(&self, i: usize, k: usize) -> f64 {
        self.omega[i - 1][k]
    }
}

/// Evaluates the `ω` and `Δ` recurrences at `z`.
///
/// `Δ_{i,m}` is accumulated directly rather than by summing `ω_{i,k}`: for
/// large `z` the individual `ω` terms are large and of alternating sign.
pub fn delta_coefficients(t: &ButcherTableau, z: f64) -> Result<DeltaCoefficients, StabilityError> {
    if !(z.is_finite() && z >= 0.0) {
        return Err(StabilityError::Argument(z));
    }
    let s = t.stages();
    if s > 4 {
        return Err(StabilityError::TooManyStages(s));
    }
    let phis: Vec<f64> = (0..=s).map(|j| phi(j, t.c[j] * z)).collect();
    let mut omega: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut delta: Vec<Vec<f64>> = Vec::with_capacity(s);
    for i in 1..=s {
        let denom = t.coeff(i, i - 1) * phis[i - 1];
        if denom.abs() < 1e-300 {
            return Err(StabilityError::Underflow(i));
        }
        let inv = 1.0 / denom;
        let defect = defect_value(t, i, z);
        let a = |j: usize| t.coeff(i, j);

        // ω_{i,k}: τn_j = Σ_k (ω_{j+1,k} + z δ_{k,j+1}) u_k for j ≤ i − 2.
        let mut w = vec![0.0; i + 1];
        let diag_sum: f64 = (0..i.saturating_sub(1)).map(|j| a(j) * phis[j]).sum();
        w[i] = inv * (1.0 + z * diag_sum + defect);
        for (k, wk) in w.iter_mut().enumerate().take(i) {
            let mut acc = if k == 0 { -1.0 } else { 0.0 };
            for j in 0..i.saturating_sub(1) {
                let prev = omega[j].get(k).copied().unwrap_or(0.0);
                let shift = if k == j + 1 { z } else { 0.0 };
                acc -= a(j) * phis[j] * (prev + shift);
            }
            *wk = inv * acc;
        }

        let mut d = vec![0.0; i];
        for m in 1..=i {
            let mut acc = 1.0 + defect;
            for j in 0..i - 1 {
                if j + 1 < m {
                    acc += z * a(j) * phis[j];
                } else {
                    acc -= a(j) * phis[j] * delta[j][m - 1];
                }
            }
            d[m - 1] = inv * acc;
        }
        omega.push(w);
        delta.push(d);
    }
    Ok(DeltaCoefficients { z, omega, delta })
}

fn defect_value(t: &ButcherTableau, i: usize, z: f64) -> f64 {
    let coeffs = equilibrium_defect_coefficients(t, i);
    coeffs
        .iter()
        .rev()
        .fold(0.0, |acc, &c| acc * z + if c.abs() < DEFECT_SNAP { 0.0 } else { c })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMatrixEntry {
    pub label: String,
    pub value: f64,
}

/// The scalar energy-stability quantities at `z`: for each stage `i` the
/// diagonal combination `Δ_{i,i} − ½Σ_{j<i}Δ_{i,j} − ½Σ_{j>i}Δ_{j,i}`,
/// followed by the off-diagonal `Δ_{i,j}`, `j < i`.
pub fn energy_matrix_entries(t: &ButcherTableau, z: f64) -> Result<Vec<EnergyMatrixEntry>, StabilityError> {
    let dc = delta_coefficients(t, z)?;
    let s = dc.stages();
    let mut out = Vec::new();
    for i in 1..=s {
        let left: f64 = (1..i).map(|j| dc.delta(i, j)).sum();
        let below: f64 = (i + 1..=s).map(|j| dc.delta(j, i)).sum();
        out.push(EnergyMatrixEntry {
            label: format!("D{i}"),
            value: dc.delta(i, i) - 0.5 * left - 0.5 * below,
        });
    }
    for i in 2..=s {
        for j in 1..i {
            out.push(EnergyMatrixEntry {
                label: format!("Delta{i}{j}"),
                value: dc.delta(i, j),
            });
        }
    }
    Ok(out)
}

/// Minimum of the energy-stability entries over a sampled range of `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdScan {
    pub tableau: String,
    pub samples: usize,
    pub z_max: f64,
    pub min_value: f64,
    pub min_label: String,
    pub min_z: f64,
}

/// Sample points: `z = 0` followed by `samples − 1` log-spaced points in
/// `[z_min, z_max]`.
pub fn log_samples(samples: usize, z_min: f64, z_max: f64) -> Vec<f64> {
    let mut zs = vec![0.0];
    let n = samples.saturating_sub(1);
    let (lo, hi) = (z_min.log10(), z_max.log10());
    for k in 0..n {
        let frac = if n == 1 { 1.0 } else { k as f64 / (n - 1) as f64 };
        zs.push(10f64.powf(lo + frac * (hi - lo)));
    }
    zs
}

pub fn psd_scan(t: &ButcherTableau, samples: usize, z_max: f64) -> Result<PsdScan, StabilityError> {
    let mut scan = PsdScan {
        tableau: t.name.clone(),
        samples,
        z_max,
        min_value: f64::INFINITY,
        min_label: String::new(),
        min_z: 0.0,
    };
    for z in log_samples(samples, 1e-6, z_max) {
        for entry in energy_matrix_entries(t, z)? {
            if entry.value < scan.min_value {
                scan.min_value = entry.value;
                scan.min_label = entry.label;
                scan.min_z = z;
            }
        }
    }
    Ok(scan)
}

/// `Φ(θ, z) = φ_s(−(1−θ)z) / φ_s(θz)`.
pub fn stability_function(s: usize, theta: f64, z: Complex64) -> Result<Complex64, StabilityError> {
    if !(1..=3).contains(&s) {
        return Err(StabilityError::StageCount(s));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(StabilityError::Theta(theta));
    }
    let den = phi_complex(s, z * theta);
    if den.norm() < 1e-300 {
        return Err(StabilityError::Pole(z));
    }
    Ok(phi_complex(s, -z * (1.0 - theta)) / den)
}

/// Amplification factor at the plane point `w = −z`, where the left half
/// plane `Re w ≤ 0` corresponds to decaying modes.
pub fn amplification(s: usize, theta: f64, w: Complex64) -> Result<Complex64, StabilityError> {
    stability_function(s, theta, -w)
}

/// Rectangle `[re_min, re_max] × [im_min, im_max]` in the `w` plane.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Default for Window {
    fn default() -> Self {
        Self {
            re_min: -6.0,
            re_max: 2.0,
            im_min: -4.0,
            im_max: 4.0,
        }
    }
}

impl Window {
    /// The part of the window with `Re w ≤ 0`.
    pub fn left_half(&self) -> Self {
        Self {
            re_max: self.re_max.min(0.0),
            ..*self
        }
    }

    /// Equispaced vertices, endpoints included; row-major in the imaginary part.
    pub fn vertices(&self, resolution: usize) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        let n = resolution.max(2);
        let dx = (self.re_max - self.re_min) / (n - 1) as f64;
        let dy = (self.im_max - self.im_min) / (n - 1) as f64;
        (0..n).flat_map(move |j| {
            (0..n).map(move |i| {
                (
                    i,
                    j,
                    Complex64::new(self.re_min + i as f64 * dx, self.im_min + j as f64 * dy),
                )
            })
        })
    }

    pub fn area(&self) -> f64 {
        (self.re_max - self.re_min) * (self.im_max - self.im_min)
    }
}

/// Largest `|Φ|` over a `resolution × resolution` sampling of `window`.
/// Poles count as infinite.
pub fn max_amplification(s: usize, theta: f64, window: &Window, resolution: usize) -> Result<f64, StabilityError> {
    let mut worst: f64 = 0.0;
    for (_, _, w) in window.vertices(resolution) {
        let a = match amplification(s, theta, w) {
            Ok(v) => v.norm(),
            Err(StabilityError::Pole(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        worst = worst.max(a);
    }
    Ok(worst)
}

/// Area of `{|Φ| ≤ 1}` within `window`, estimated from vertex samples.
pub fn stable_area(s: usize, theta: f64, window: &Window, resolution: usize) -> Result<f64, StabilityError> {
    let mut stable = 0usize;
    let mut total = 0usize;
    for (_, _, w) in window.vertices(resolution) {
        total += 1;
        if let Ok(v) = amplification(s, theta, w) {
            if v.norm() <= 1.0 {
                stable += 1;
            }
        }
    }
    Ok(window.area() * stable as f64 / total as f64)
}

/// Real-axis stability limit: bisection for `|Φ(θ, −w)| = 1` on `[lo, hi]`,
/// which must bracket a sign change of `|Φ| − 1`.
pub fn real_axis_limit(s: usize, theta: f64, mut lo: f64, mut hi: f64) -> Result<Option<f64>, StabilityError> {
    let g = |w: f64| -> Result<f64, StabilityError> {
        Ok(amplification(s, theta, Complex64::new(w, 0.0))?.norm() - 1.0)
    };
    let (mut glo, ghi) = (g(lo)?, g(hi)?);
    if glo.signum() == ghi.signum() {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * lo.abs().max(1.0) {
            break;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// An ordered list of points `(Re w, Im w)`; closed curves repeat their
/// first point at the end.
pub type Polyline = Vec<(f64, f64)>;

/// Traces the level set `|Φ(θ, −w)| = 1` over `window` with marching squares
/// on a `resolution × resolution` vertex grid.
pub fn stability_boundary(s: usize, theta: f64, window: &Window, resolution: usize) -> Result<Vec<Polyline>, StabilityError> {
    let n = resolution.max(2);
    let mut field = vec![0.0; n * n];
    let mut coords = vec![Complex64::new(0.0, 0.0); n * n];
    for (i, j, w) in window.vertices(n) {
        let v = match amplification(s, theta, w) {
            Ok(a) => a.norm() - 1.0,
            Err(StabilityError::Pole(_)) => f64::MAX,
            Err(e) => return Err(e),
        };
        field[i + n * j] = v;
        coords[i + n * j] = w;
    }
    Ok(march(&field, &coords, n))
}

/// Marching squares for the zero level set of `field` on an `n × n` grid.
fn march(field: &[f64], coords: &[Complex64], n: usize) -> Vec<Polyline> {
    use std::collections::BTreeMap;

    let idx = |i: usize, j: usize| i + n * j;
    let inside = |i: usize, j: usize| field[idx(i, j)] < 0.0;
    // Edge ids: horizontal edge from (i, j) to (i+1, j) is 2·idx, vertical
    // edge from (i, j) to (i, j+1) is 2·idx + 1.
    let mut points: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    let mut crossing = |edge: usize| -> usize {
        points.entry(edge).or_insert_with(|| {
            let v = edge / 2;
            let (i, j) = (v % n, v / n);
            let (a, b) = if edge % 2 == 0 {
                (idx(i, j), idx(i + 1, j))
            } else {
                (idx(i, j), idx(i, j + 1))
            };
            let (fa, fb) = (field[a], field[b]);
            let t = if fa == fb { 0.5 } else { (fa / (fa - fb)).clamp(0.0, 1.0) };
            let p = coords[a] + (coords[b] - coords[a]) * t;
            (p.re, p.im)
        });
        edge
    };

    let mut segments: Vec<(usize, usize)> = Vec::new();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let bottom = 2 * idx(i, j);
            let top = 2 * idx(i, j + 1);
            let left = 2 * idx(i, j) + 1;
            let right = 2 * idx(i + 1, j) + 1;
            let corners = [inside(i, j), inside(i + 1, j), inside(i + 1, j + 1), inside(i, j + 1)];
            let code = corners
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, &c)| acc | ((c as u8) << k));
            let pairs: &[(usize, usize)] = match code {
                0 | 15 => &[],
                1 | 14 => &[(left, bottom)],
                2 | 13 => &[(bottom, right)],
                3 | 12 => &[(left, right)],
                4 | 11 => &[(right, top)],
                6 | 9 => &[(bottom, top)],
                7 | 8 => &[(left, top)],
                5 | 10 => {
                    let center = 0.25
                        * (field[idx(i, j)] + field[idx(i + 1, j)] + field[idx(i + 1, j + 1)] + field[idx(i, j + 1)]);
                    // Corners 0 and 2 share a state; the centre decides
                    // whether they are joined through the cell.
                    let joined = (center < 0.0) == corners[0];
                    if joined {
                        &[(left, top), (bottom, right)]
                    } else {
                        &[(left, bottom), (right, top)]
                    }
                }
                _ => unreachable!(),
            };
            for &(a, b) in pairs {
                segments.push((crossing(a), crossing(b)));
            }
        }
    }

    let mut adjacency: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        adjacency.entry(a).or_default().push(k);
        adjacency.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let starts: Vec<usize> = adjacency
        .iter()
        .filter(|(_, segs)| segs.len() == 1)
        .map(|(&e, _)| e)
        .chain(adjacency.keys().copied())
        .collect();
    for start in starts {
        let mut current = start;
        let mut line = vec![points[&current]];
        while let Some(&k) = adjacency[&current].iter().find(|&&k| !used[k]) {
            used[k] = true;
            let (a, b) = segments[k];
            current = if a == current { b } else { a };
            line.push(points[&current]);
        }
        if line.len() > 1 {
            lines.push(line);
        }
    }
    lines
}
