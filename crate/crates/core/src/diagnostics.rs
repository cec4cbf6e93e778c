//! Discrete energy, mass and norms with the quadrature inner product
//! `⟨u, v⟩ = (Π h_k) Σ u_j v_j`.

use serde::{Deserialize, Serialize};

use crate::model::ModelParams;
use crate::spectral::{self, Grid, RealField, SpectralError, Symbol};
use crate::Complex64;

/// One row of a run's time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesRecord {
    pub step: usize,
    pub t: f64,
    pub tau: f64,
    pub energy: f64,
    pub mass: f64,
    pub err_l2: Option<f64>,
    pub cpu_s: f64,
}

impl TimeSeriesRecord {
    /// Equality ignoring the wall-clock column.
    pub fn same_numerics(&self, other: &Self) -> bool {
        self.step == other.step
            && self.t.to_bits() == other.t.to_bits()
            && self.tau.to_bits() == other.tau.to_bits()
            && self.energy.to_bits() == other.energy.to_bits()
            && self.mass.to_bits() == other.mass.to_bits()
            && self.err_l2.map(f64::to_bits) == other.err_l2.map(f64::to_bits)
    }
}

pub fn inner_product(u: &RealField, v: &RealField) -> Result<f64, SpectralError> {
    if u.grid() != v.grid() {
        return Err(SpectralError::GridMismatch);
    }
    let s: f64 = u.values().iter().zip(v.values()).map(|(a, b)| a * b).sum();
    Ok(u.grid().cell_volume() * s)
}

/// `⟨u, 1⟩`.
pub fn mass(u: &RealField) -> f64 {
    u.grid().cell_volume() * u.values().iter().sum::<f64>()
}

pub fn norm_l2(u: &RealField) -> f64 {
    (u.grid().cell_volume() * u.values().iter().map(|v| v * v).sum::<f64>()).sqrt()
}

pub fn norm_linf(u: &RealField) -> f64 {
    u.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `‖u − v‖` in the discrete ℓ² norm.
pub fn error_l2(u: &RealField, reference: &RealField) -> Result<f64, SpectralError> {
    Ok(norm_l2(&u.axpy(-1.0, reference)?))
}

/// Samples a fine-grid field at the nodes of a coarser nested grid.
pub fn restrict(fine: &RealField, coarse: &Grid) -> Result<RealField, SpectralError> {
    let fg = fine.grid();
    if fg.dim() != coarse.dim() {
        return Err(SpectralError::GridMismatch);
    }
    let mut ratio = [1usize; 3];
    for k in 0..fg.dim() {
        let (f, c) = (fg.axis(k), coarse.axis(k));
        if f.lower != c.lower || f.upper != c.upper || f.n % c.n != 0 {
            return Err(SpectralError::GridMismatch);
        }
        ratio[k] = f.n / c.n;
    }
    let shape = fg.shape();
    let values = (0..coarse.len())
        .map(|flat| {
            let idx = coarse.multi_index(flat);
            let mut fine_flat = 0;
            let mut stride = 1;
            for k in 0..fg.dim() {
                fine_flat += idx[k] * ratio[k] * stride;
                stride *= shape[k];
            }
            fine.values()[fine_flat]
        })
        .collect();
    RealField::new(coarse, values)
}

/// `⟨u, Δ_N u⟩` by Parseval on the half spectrum.
pub fn gradient_quadratic(laplacian: &Symbol, u: &RealField) -> Result<f64, SpectralError> {
    let grid = laplacian.grid();
    if grid != u.grid() {
        return Err(SpectralError::GridMismatch);
    }
    let mut spec = vec![Complex64::new(0.0, 0.0); grid.half_len()];
    grid.forward_half(u.values(), &mut spec);
    let row = grid.half_row();
    let n1 = grid.axis(0).n;
    let mut acc = 0.0;
    for (k, (c, &lam)) in spec.iter().zip(laplacian.half()).enumerate() {
        let l1 = k % row;
        // Modes 0 < l1 < N1/2 stand for themselves and their conjugates.
        let weight = if l1 == 0 || 2 * l1 == n1 { 1.0 } else { 2.0 };
        acc += weight * lam * c.norm_sqr();
    }
    Ok(grid.volume() * acc)
}

/// `E(u) = −ε²/2 ⟨u, Δ_N u⟩ + ⟨F(u), 1⟩`, with the truncated potential when
/// enabled.
pub fn energy_with(laplacian: &Symbol, params: &ModelParams, u: &RealField) -> Result<f64, SpectralError> {
    let grad = gradient_quadratic(laplacian, u)?;
    let pot: f64 = u.values().iter().map(|&v| params.potential(v)).sum();
    Ok(-0.5 * params.epsilon2 * grad + u.grid().cell_volume() * pot)
}

pub fn energy(params: &ModelParams, u: &RealField) -> f64 {
    let lap = spectral::laplacian_symbol(u.grid());
    energy_with(&lap, params, u).expect("symbol built on the field's grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn line() -> Grid {
        Grid::new(&[32], &[-1.0], &[1.0]).unwrap()
    }

    #[test]
    fn energy_of_constants() {
        let g = line();
        let p = ModelParams::new(0.01);
        assert!((energy(&p, &RealField::zeros(&g)) - 0.5).abs() < 1e-15);
        assert_eq!(energy(&p, &RealField::constant(&g, 1.0)), 0.0);
    }

    #[test]
    fn energy_matches_physical_space_evaluation() {
        let g = Grid::new(&[16, 8], &[0.0, -1.0], &[2.0, 1.0]).unwrap();
        let u = g.sample(|x| (PI * x[0]).sin() * (2.0 * PI * x[1]).cos() + 0.3 * (3.0 * PI * x[0]).cos());
        let p = ModelParams::new(0.02);
        let lap = spectral::laplacian_symbol(&g);
        let lu = spectral::apply_symbol(&lap, &u).unwrap();
        let direct = -0.5 * p.epsilon2 * inner_product(&u, &lu).unwrap()
            + g.cell_volume() * u.values().iter().map(|&v| p.potential(v)).sum::<f64>();
        let e = energy(&p, &u);
        assert!((e - direct).abs() <= 1e-13 * direct.abs());
    }

    #[test]
    fn energy_is_affine_in_epsilon2() {
        let g = line();
        let u = g.sample(|x| (PI * x[0]).sin());
        let e = |eps2: f64| energy(&ModelParams::new(eps2), &u);
        let (e1, e2, e4) = (e(0.01), e(0.02), e(0.04));
        assert!(((e4 - e2) - 2.0 * (e2 - e1)).abs() < 1e-13);
        // Gradient part of sin(πx) on (−1,1): ε²/2 · π² · 1.
        assert!(((e2 - e1) - 0.5 * 0.01 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn mass_and_norms_of_constants() {
        let g = Grid::new(&[8, 8], &[0.0, 0.0], &[2.0, 3.0]).unwrap();
        let c = RealField::constant(&g, -1.5);
        assert!((mass(&c) + 9.0).abs() < 1e-14);
        assert!((norm_l2(&c) - 1.5 * 6f64.sqrt()).abs() < 1e-14);
        assert_eq!(norm_linf(&c), 1.5);
    }

    #[test]
    fn restriction_picks_coarse_nodes() {
        let fine = Grid::new(&[16, 8], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let coarse = Grid::new(&[4, 4], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let f = |x: [f64; 3]| x[0] + 10.0 * x[1];
        let r = restrict(&fine.sample(f), &coarse).unwrap();
        assert_eq!(r, coarse.sample(f));
        let wrong = Grid::new(&[6, 4], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(restrict(&fine.sample(f), &wrong).is_err());
    }

    #[test]
    fn record_comparison_ignores_wall_clock() {
        let a = TimeSeriesRecord {
            step: 1,
            t: 0.1,
            tau: 0.1,
            energy: 1.0,
            mass: 0.0,
            err_l2: None,
            cpu_s: 0.5,
        };
        let b = TimeSeriesRecord { cpu_s: 0.7, ..a };
        assert!(a.same_numerics(&b));
        assert!(!a.same_numerics(&TimeSeriesRecord { energy: 1.0 + 1e-15, ..b }));
    }
}
