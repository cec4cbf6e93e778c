//! Brute-force oracles shared by the integration tests: dense collocation
//! matrices built from the trigonometric interpolant, dense versions of the
//! one-step maps, and a Newton solver for discrete steady states.
#![allow(dead_code)]

use efrk::schemes::{ButcherTableau, BuiltinTableau};
use efrk::{Grid, RealField};
use nalgebra::{DMatrix, DVector};

/// Dense second-derivative matrix on `N` points of `[a, b)`:
/// `D_ij = Σ_{|l| ≤ N/2} (iμl)² / (N c_l) · e^{iμl(x_i − x_j)}` with
/// `c_{±N/2} = 2` and `c_l = 1` otherwise.
pub fn dense_laplacian_1d(n: usize, a: f64, b: f64) -> DMatrix<f64> {
    let mu = 2.0 * std::f64::consts::PI / (b - a);
    let half = (n / 2) as i64;
    let nn = n as i64;
    DMatrix::from_fn(n, n, |i, j| {
        (-half..=half)
            .map(|l| {
                let c = if l.abs() == half { 2.0 } else { 1.0 };
                let k = mu * l as f64;
                // μl(x_i − x_j) = 2π·l(i − j)/N, reduced exactly.
                let phase = (l * (i as i64 - j as i64)).rem_euclid(nn);
                let angle = 2.0 * std::f64::consts::PI * phase as f64 / n as f64;
                -k * k / (n as f64 * c) * angle.cos()
            })
            .sum()
    })
}

/// `Δ_N` on a 1D or 2D grid as a Kronecker sum, first axis fastest.
pub fn dense_laplacian(grid: &Grid) -> DMatrix<f64> {
    let axes = grid.axes();
    let d1 = dense_laplacian_1d(axes[0].n, axes[0].lower, axes[0].upper);
    if grid.dim() == 1 {
        return d1;
    }
    assert_eq!(grid.dim(), 2, "dense oracle covers 1D and 2D only");
    let d2 = dense_laplacian_1d(axes[1].n, axes[1].lower, axes[1].upper);
    let (n1, n2) = (axes[0].n, axes[1].n);
    DMatrix::identity(n2, n2).kronecker(&d1) + d2.kronecker(&DMatrix::identity(n1, n1))
}

pub fn f(u: f64) -> f64 {
    u * u * u - u
}

pub fn df(u: f64) -> f64 {
    3.0 * u * u - 1.0
}

/// Dense model with the untruncated double well.
pub struct Dense {
    pub lap: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub epsilon2: f64,
    pub kappa: f64,
}

impl Dense {
    pub fn new(grid: &Grid, epsilon2: f64, kappa: f64) -> Self {
        let lap = dense_laplacian(grid);
        let n = lap.nrows();
        let l = &lap * (&lap * (-epsilon2) + DMatrix::identity(n, n) * kappa);
        Self { lap, l, epsilon2, kappa }
    }

    pub fn n_kappa(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.lap * u.map(|v| f(v) - self.kappa * v)
    }

    /// `φ_k(−cτL)` as an explicit matrix polynomial.
    pub fn phi(&self, k: usize, c: f64, tau: f64) -> DMatrix<f64> {
        let n = self.l.nrows();
        let m = &self.l * (-c * tau);
        let mut term = DMatrix::identity(n, n);
        let mut sum = term.clone();
        for j in 1..=k {
            term = &term * &m / j as f64;
            sum += &term;
        }
        sum
    }

    /// `e^{cτL}` by a scaled Taylor series with repeated squaring.
    pub fn exp(&self, c: f64, tau: f64) -> DMatrix<f64> {
        let n = self.l.nrows();
        let a = &self.l * (c * tau);
        let norm = a.abs().row_sum().max();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let a = a / 2f64.powi(squarings as i32);
        let mut term = DMatrix::identity(n, n);
        let mut sum = term.clone();
        for j in 1..30 {
            term = &term * &a / j as f64;
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    pub fn efrk_step(&self, t: &ButcherTableau, tau: f64, u: &DVector<f64>) -> DVector<f64> {
        let s = t.stages();
        let mut stages = vec![u.clone()];
        let mut terms: Vec<DVector<f64>> = Vec::new();
        for i in 1..=s {
            let j = i - 1;
            terms.push(self.phi(j, t.c[j], tau) * self.n_kappa(&stages[j]));
            let mut r = u.clone();
            for (j, term) in terms.iter().enumerate() {
                r += term * (tau * t.coeff(i, j));
            }
            let lu = self.phi(i, t.c[i], tau).lu();
            stages.push(lu.solve(&r).expect("φ_i(−c_iτL) is invertible"));
        }
        stages.pop().unwrap()
    }

    pub fn ifrk_step(&self, t: &ButcherTableau, tau: f64, u: &DVector<f64>) -> DVector<f64> {
        let s = t.stages();
        let mut stages = vec![u.clone()];
        for i in 1..=s {
            let mut v = self.exp(t.c[i], tau) * u;
            for j in 0..i {
                v += self.exp(t.c[i] - t.c[j], tau) * self.n_kappa(&stages[j]) * (tau * t.coeff(i, j));
            }
            stages.push(v);
        }
        stages.pop().unwrap()
    }

    pub fn lie_trotter_step(&self, tau: f64, u: &DVector<f64>) -> DVector<f64> {
        let v = u + self.n_kappa(u) * tau;
        self.exp(1.0, tau) * v
    }

    pub fn strang_step(&self, tau: f64, u: &DVector<f64>) -> DVector<f64> {
        let half = self.exp(0.5, tau);
        let v = &half * u;
        let w = &v + self.n_kappa(&v) * tau;
        let v = &v + (self.n_kappa(&v) + self.n_kappa(&w)) * (0.5 * tau);
        half * v
    }

    /// `L u + N_κ(u)`.
    pub fn vector_field(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.l * u + self.n_kappa(u)
    }
}

pub fn to_vector(u: &RealField) -> DVector<f64> {
    DVector::from_column_slice(u.values())
}

pub fn to_field(grid: &Grid, v: &DVector<f64>) -> RealField {
    RealField::new(grid, v.as_slice().to_vec()).unwrap()
}

/// A discrete steady state with prescribed mean.
pub struct Equilibrium {
    pub u: RealField,
    /// Constant chemical potential `μ = −ε²Δ_N u + f(u)`.
    pub mu: f64,
    /// `max |−ε²Δ_N u + f(u) − μ|`.
    pub residual: f64,
}

/// Average over reflections `x_k → −x_k` of every axis whose domain is
/// symmetric about zero.
pub fn symmetrize(grid: &Grid, v: &DVector<f64>) -> DVector<f64> {
    let shape = grid.shape();
    let mut out = v.clone();
    for (k, axis) in grid.axes().iter().enumerate() {
        if (axis.lower + axis.upper).abs() > 1e-14 {
            continue;
        }
        let stride: usize = shape[..k].iter().product();
        let n = shape[k];
        let prev = out.clone();
        for flat in 0..grid.len() {
            let i = (flat / stride) % n;
            let mirror = flat - i * stride + ((n - i) % n) * stride;
            out[flat] = 0.5 * (prev[flat] + prev[mirror]);
        }
    }
    out
}

/// Newton's method on `−ε²Δ_N u + f(u) − μ = 0` with `mean(u)` fixed to
/// that of `guess`. Updates are symmetrized under axis reflections, which
/// pins the translation modes of symmetric guesses. Any such state satisfies `L_κ u + N_κ(u) = Δ_N μ = 0`.
pub fn newton_equilibrium(guess: &RealField, epsilon2: f64) -> Equilibrium {
    let grid = guess.grid().clone();
    let lap = dense_laplacian(&grid);
    let n = grid.len();
    let mean = guess.mean();
    let mut u = symmetrize(&grid, &to_vector(guess));
    let mut mu = u.map(f).mean();
    let residual = |u: &DVector<f64>, mu: f64| -> DVector<f64> {
        let mut r = &lap * u * (-epsilon2) + u.map(f);
        r.add_scalar_mut(-mu);
        r
    };
    for _ in 0..100 {
        let r = residual(&u, mu);
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&(-&r));
        rhs[n] = -(u.mean() - mean);
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        jac.view_mut((0, 0), (n, n)).copy_from(&(&lap * (-epsilon2)));
        for i in 0..n {
            jac[(i, i)] += df(u[i]);
            jac[(i, n)] = -1.0;
            jac[(n, i)] = 1.0 / n as f64;
        }
        let mut delta = jac.lu().solve(&rhs).expect("Newton system is solvable");
        let sym = symmetrize(&grid, &delta.rows(0, n).into_owned());
        delta.rows_mut(0, n).copy_from(&sym);
        // Backtrack until the residual decreases.
        let norm = r.norm();
        let mut step = 1.0;
        loop {
            let trial = &u + delta.rows(0, n) * step;
            if residual(&trial, mu + step * delta[n]).norm() < norm || step < 1e-4 {
                u = trial;
                mu += step * delta[n];
                break;
            }
            step *= 0.5;
        }
        if step == 1.0 && delta.amax() < 1e-15 {
            break;
        }
    }
    let res = residual(&u, mu).amax();
    Equilibrium {
        u: to_field(&grid, &u),
        mu,
        residual: res,
    }
}

/// Steady interface profile on `(−1, 1)`: a plateau at +1 for `|x| < 0.5`.
pub fn tanh_profile(grid: &Grid, epsilon2: f64) -> RealField {
    let w = (2.0 * epsilon2).sqrt();
    grid.sample(|x| ((0.5 - x[0].abs()) / w).tanh())
}

/// Closed forms of `Δ_{i,j}(z)` for the builtin tableaux, `z = −τℓ`.
pub fn closed_delta(which: BuiltinTableau, i: usize, j: usize, z: f64) -> f64 {
    match which {
        BuiltinTableau::Rk11 => 1.0,
        BuiltinTableau::Rk22 => match (i, j) {
            (1, 1) => 1.0,
            (2, 1) => 1.0 / (1.0 + z),
            (2, 2) => (2.0 + z) / (1.0 + z),
            _ => unreachable!(),
        },
        BuiltinTableau::Rk33 => {
            let q = 3.0 + 2.0 * z + 2.0 * z * z / 3.0;
            match (i, j) {
                (1, 1) => 3.0,
                (2, 1) | (2, 2) => 1.0 / (2.0 / 3.0 + 2.0 * z / 9.0),
                (3, 1) => 1.0 / q,
                (3, 2) | (3, 3) => (4.0 + z) / q,
                _ => unreachable!(),
            }
        }
    }
}

/// Closed forms of the diagonal combinations `D_i`.
pub fn closed_diagonal(which: BuiltinTableau, i: usize, z: f64) -> f64 {
    match (which, i) {
        (BuiltinTableau::Rk11, 1) => 1.0,
        (BuiltinTableau::Rk22, 1) => (0.5 + z) / (1.0 + z),
        (BuiltinTableau::Rk22, 2) => (1.5 + z) / (1.0 + z),
        (BuiltinTableau::Rk33, _) => {
            let den = 9.0 + 9.0 * z + 4.0 * z * z + 2.0 * z.powi(3) / 3.0;
            match i {
                // 3 − ½Δ₂₁ − ½Δ₃₁ over the common denominator; the linear
                // coefficient is 22.
                1 => (75.0 / 4.0 + 22.0 * z + 10.5 * z * z + 2.0 * z.powi(3)) / den,
                2 => (0.75 + z + z * z) / den,
                3 => (1.5 + 0.5 * z) / (3.0 + 2.0 * z + 2.0 * z * z / 3.0),
                _ => unreachable!(),
            }
        }
        _ => unreachable!(),
    }
}
