//! Explicit Butcher tableaux in the stage-indexed layout
//!
//! ```text
//! u_i = u_0 + τ Σ_{j<i} a_{i,j} k_j,   i = 1..s,
//! ```
//!
//! where row `s` holds the weights `b` and `c_i = Σ_j a_{i,j}`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::taylor::phi;

/// Tolerance for the algebraic checks on builtin tableaux.
pub const CONDITION_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TableauError {
    #[error("unknown tableau {0:?} (expected RK11, RK22 or RK33)")]
    UnknownName(String),
    #[error("tableau must have at least one stage")]
    Empty,
    #[error("row {row} has {got} coefficients, expected {row}")]
    RowLength { row: usize, got: usize },
    #[error("coefficients must be finite")]
    NonFinite,
    #[error("last abscissa c_s = {0} must equal 1")]
    Consistency(f64),
    #[error("order conditions are tabulated up to order 4, got {0}")]
    OrderTooHigh(usize),
    #[error("equilibrium conditions are supported for at most 4 stages, got {0}")]
    TooManyStages(usize),
    #[error("stage index {stage} out of range 1..={stages}")]
    Stage { stage: usize, stages: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BuiltinTableau {
    #[serde(rename = "RK11")]
    Rk11,
    #[serde(rename = "RK22")]
    Rk22,
    #[serde(rename = "RK33")]
    Rk33,
}

impl BuiltinTableau {
    pub const ALL: [BuiltinTableau; 3] = [Self::Rk11, Self::Rk22, Self::Rk33];

    pub fn name(self) -> &'static str {
        match self {
            Self::Rk11 => "RK11",
            Self::Rk22 => "RK22",
            Self::Rk33 => "RK33",
        }
    }

    pub fn tableau(self) -> ButcherTableau {
        builtin(self)
    }
}

impl fmt::Display for BuiltinTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinTableau {
    type Err = TableauError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace(['(', ')', ',', ' '], "").as_str() {
            "RK11" => Ok(Self::Rk11),
            "RK22" => Ok(Self::Rk22),
            "RK33" => Ok(Self::Rk33),
            _ => Err(TableauError::UnknownName(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ButcherTableau {
    pub name: String,
    /// Declared order `p`.
    pub order: usize,
    /// Row `i - 1` holds `a_{i,0}, …, a_{i,i-1}` for `i = 1..=s`.
    pub a: Vec<Vec<f64>>,
    /// Abscissas `c_0 = 0, c_1, …, c_s`.
    pub c: Vec<f64>,
}

impl ButcherTableau {
    /// Builds a tableau from its lower-triangular rows; the abscissas are
    /// the row sums.
    pub fn new(name: &str, order: usize, a: Vec<Vec<f64>>) -> Result<Self, TableauError> {
        if a.is_empty() {
            return Err(TableauError::Empty);
        }
        for (k, row) in a.iter().enumerate() {
            if row.len() != k + 1 {
                return Err(TableauError::RowLength {
                    row: k + 1,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(TableauError::NonFinite);
            }
        }
        let c: Vec<f64> = std::iter::once(0.0)
            .chain(a.iter().map(|row| row.iter().sum()))
            .collect();
        let last = *c.last().expect("non-empty");
        if (last - 1.0).abs() > CONDITION_TOLERANCE {
            return Err(TableauError::Consistency(last));
        }
        Ok(Self {
            name: name.to_string(),
            order,
            a,
            c,
        })
    }

    /// Number of stages `s`.
    pub fn stages(&self) -> usize {
        self.a.len()
    }

    /// `a_{i,j}` for `1 ≤ i ≤ s`, `j < i`.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.a[i - 1][j]
    }

    /// Weights `b_j = a_{s,j}`.
    pub fn weights(&self) -> &[f64] {
        &self.a[self.a.len() - 1]
    }
}

/// The forward Euler, Heun second- and Heun third-order tableaux.
pub fn builtin(which: BuiltinTableau) -> ButcherTableau {
    let (order, a) = match which {
        BuiltinTableau::Rk11 => (1, vec![vec![1.0]]),
        BuiltinTableau::Rk22 => (2, vec![vec![1.0], vec![0.5, 0.5]]),
        BuiltinTableau::Rk33 => (
            3,
            vec![
                vec![1.0 / 3.0],
                vec![0.0, 2.0 / 3.0],
                vec![0.25, 0.0, 0.75],
            ],
        ),
    };
    let mut t = ButcherTableau::new(which.name(), order, a).expect("builtin tableaux are valid");
    // Exact abscissas rather than rounded row sums.
    if which == BuiltinTableau::Rk33 {
        t.c = vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
    }
    t
}

pub fn builtin_by_name(name: &str) -> Result<ButcherTableau, TableauError> {
    Ok(builtin(name.parse()?))
}

/// The classical four-stage, fourth-order method.
pub fn classical_rk4() -> ButcherTableau {
    ButcherTableau::new(
        "RK4",
        4,
        vec![
            vec![0.5],
            vec![0.0, 0.5],
            vec![0.0, 0.0, 1.0],
            vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
        ],
    )
    .expect("valid tableau")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResidual {
    pub label: String,
    pub value: f64,
    pub target: f64,
}

impl ConditionResidual {
    pub fn residual(&self) -> f64 {
        (self.value - self.target).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub conditions: Vec<ConditionResidual>,
}

impl ConditionReport {
    pub fn max_residual(&self) -> f64 {
        self.conditions
            .iter()
            .map(ConditionResidual::residual)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }

    pub fn failures(&self, tol: f64) -> impl Iterator<Item = &ConditionResidual> {
        self.conditions.iter().filter(move |c| c.residual() > tol)
    }
}

/// Evaluates the rooted-tree order conditions up to order `p ≤ 4`.
pub fn check_order_conditions(t: &ButcherTableau, p: usize) -> Result<ConditionReport, TableauError> {
    if p > 4 {
        return Err(TableauError::OrderTooHigh(p));
    }
    let s = t.stages();
    let b = t.weights();
    let c = &t.c[..s];
    // Stage matrix A (s × s, strictly lower triangular).
    let a = |i: usize, j: usize| if j < i { t.coeff(i, j) } else { 0.0 };
    let ac: Vec<f64> = (0..s).map(|i| (0..s).map(|j| a(i, j) * c[j]).sum()).collect();
    let ac2: Vec<f64> = (0..s).map(|i| (0..s).map(|j| a(i, j) * c[j] * c[j]).sum()).collect();
    let a2c: Vec<f64> = (0..s).map(|i| (0..s).map(|j| a(i, j) * ac[j]).sum()).collect();
    let dot = |v: &dyn Fn(usize) -> f64| (0..s).map(|j| b[j] * v(j)).sum::<f64>();

    let all = [
        (1, "b.1", dot(&|_| 1.0), 1.0),
        (2, "b.c", dot(&|j| c[j]), 0.5),
        (3, "b.c^2", dot(&|j| c[j] * c[j]), 1.0 / 3.0),
        (3, "b.Ac", dot(&|j| ac[j]), 1.0 / 6.0),
        (4, "b.c^3", dot(&|j| c[j].powi(3)), 0.25),
        (4, "b.(c*Ac)", dot(&|j| c[j] * ac[j]), 0.125),
        (4, "b.Ac^2", dot(&|j| ac2[j]), 1.0 / 12.0),
        (4, "b.A^2c", dot(&|j| a2c[j]), 1.0 / 24.0),
    ];
    Ok(ConditionReport {
        conditions: all
            .iter()
            .filter(|(order, ..)| *order <= p)
            .map(|&(_, label, value, target)| ConditionResidual {
                label: label.to_string(),
                value,
                target,
            })
            .collect(),
    })
}

/// Coefficients of the polynomial `φ_i(c_i z) − 1 − z Σ_j a_{i,j} φ_j(c_j z)`
/// whose vanishing makes stage `i` fix every equilibrium. Index `k` holds the
/// `z^k` coefficient, `k = 0..=i`.
pub fn equilibrium_defect_coefficients(t: &ButcherTableau, i: usize) -> Vec<f64> {
    let mut coeffs = vec![0.0; i + 1];
    let mut fact = 1.0;
    for (k, coeff) in coeffs.iter_mut().enumerate().skip(1) {
        fact *= k as f64;
        let lhs = t.c[i].powi(k as i32) / fact;
        let prev_fact = fact / k as f64;
        let rhs: f64 = (k - 1..i)
            .map(|j| t.coeff(i, j) * t.c[j].powi(k as i32 - 1) / prev_fact)
            .sum();
        *coeff = lhs - rhs;
    }
    coeffs
}

/// Checks that every stage maps discrete equilibria to themselves, i.e. that
/// each defect polynomial vanishes identically. Reports the coefficients of
/// degree two and higher (degree one is the row-sum definition of `c_i`).
pub fn check_equilibrium_conditions(t: &ButcherTableau) -> Result<ConditionReport, TableauError> {
    let s = t.stages();
    if s > 4 {
        return Err(TableauError::TooManyStages(s));
    }
    let mut conditions = Vec::new();
    for i in 2..=s {
        let defect = equilibrium_defect_coefficients(t, i);
        for (k, &d) in defect.iter().enumerate().skip(2) {
            conditions.push(ConditionResidual {
                label: format!("stage {i}, z^{k}"),
                value: d,
                target: 0.0,
            });
        }
    }
    Ok(ConditionReport { conditions })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DampingKind {
    Efrk,
    Ifrk,
}

/// Per-mode multiplier that stage `i` applies to an equilibrium at
/// stiffness `z = −τℓ ≥ 0`, assuming all previous stages reproduced it.
pub fn damping_factor(t: &ButcherTableau, kind: DampingKind, i: usize, z: f64) -> Result<f64, TableauError> {
    let s = t.stages();
    if i == 0 || i > s {
        return Err(TableauError::Stage { stage: i, stages: s });
    }
    Ok(match kind {
        DampingKind::Efrk => {
            let sum: f64 = (0..i).map(|j| t.coeff(i, j) * phi(j, t.c[j] * z)).sum();
            (1.0 + z * sum) / phi(i, t.c[i] * z)
        }
        DampingKind::Ifrk => {
            let sum: f64 = (0..i)
                .map(|j| t.coeff(i, j) * ((t.c[j] - t.c[i]) * z).exp())
                .sum();
            (-t.c[i] * z).exp() + z * sum
        }
    })
}
