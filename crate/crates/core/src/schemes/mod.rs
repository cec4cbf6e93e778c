//! One-step maps for the stabilized semi-discrete system
//! `u_t = L_κ u + N_κ(u)`.
//!
//! * EFRK: `u_i = φ_i(−c_iτL_κ)^{-1} (u_0 + τ Σ_{j<i} a_{i,j} φ_j(−c_jτL_κ) N_κ(u_j))`.
//! * IFRK: `u_i = e^{c_iτL_κ} (u_0 + τ Σ_{j<i} a_{i,j} e^{−c_jτL_κ} N_κ(u_j))`.
//! * Lie–Trotter: `S_L^τ S_N^τ` with one forward Euler step for `S_N`.
//! * Strang: `S_L^{τ/2} S_N^τ S_L^{τ/2}` with one Heun step for `S_N`.
//!
//! Every stage is linear in `û_0` and in the transformed reaction terms
//! `ĝ_j = F(f(u_j) − κu_j)`, so a [`Stepper`] stores, per stage, a multiplier
//! for `û_0` and one per earlier `ĝ_j`, all evaluated once per time step size.

mod tableau;

use std::fmt;
use std::str::FromStr;

pub use tableau::*;

use crate::model::{ModelParams, Operators};
use crate::spectral::{Grid, RealField};
use crate::taylor::phi;
use crate::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StepError {
    #[error("time step must be positive and finite, got {0}")]
    Tau(f64),
    #[error("field and stepper are defined on different grids")]
    GridMismatch,
    #[error("non-finite values after stage {stage}")]
    NonFinite { stage: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchemeKind {
    Efrk(ButcherTableau),
    Ifrk(ButcherTableau),
    LieTrotter,
    Strang,
}

impl SchemeKind {
    pub fn efrk(which: BuiltinTableau) -> Self {
        Self::Efrk(builtin(which))
    }

    pub fn ifrk(which: BuiltinTableau) -> Self {
        Self::Ifrk(builtin(which))
    }

    /// Formal order of accuracy.
    pub fn order(&self) -> usize {
        match self {
            Self::Efrk(t) | Self::Ifrk(t) => t.order,
            Self::LieTrotter => 1,
            Self::Strang => 2,
        }
    }

    /// Short identifier such as `efrk33` or `lie-trotter`.
    pub fn id(&self) -> String {
        let digits = |t: &ButcherTableau| t.name.trim_start_matches("RK").to_ascii_lowercase();
        match self {
            Self::Efrk(t) => format!("efrk{}", digits(t)),
            Self::Ifrk(t) => format!("ifrk{}", digits(t)),
            Self::LieTrotter => "lie-trotter".into(),
            Self::Strang => "strang".into(),
        }
    }

    /// Every builtin scheme, EFRK first.
    pub fn all() -> Vec<SchemeKind> {
        let mut v: Vec<_> = BuiltinTableau::ALL.iter().map(|&b| Self::efrk(b)).collect();
        v.extend(BuiltinTableau::ALL.iter().map(|&b| Self::ifrk(b)));
        v.push(Self::LieTrotter);
        v.push(Self::Strang);
        v
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("unknown scheme {0:?} (expected efrk11, efrk22, efrk33, ifrk11, ifrk22, ifrk33, lie-trotter or strang)")]
pub struct UnknownScheme(pub String);

impl FromStr for SchemeKind {
    type Err = UnknownScheme;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        let tab = |rest: &str| {
            format!("rk{rest}")
                .parse::<BuiltinTableau>()
                .map_err(|_| UnknownScheme(s.to_string()))
        };
        match lower.as_str() {
            "lie-trotter" | "lietrotter" | "lie_trotter" => Ok(Self::LieTrotter),
            "strang" => Ok(Self::Strang),
            _ => {
                if let Some(rest) = lower.strip_prefix("efrk") {
                    Ok(Self::efrk(tab(rest)?))
                } else if let Some(rest) = lower.strip_prefix("ifrk") {
                    Ok(Self::ifrk(tab(rest)?))
                } else {
                    Err(UnknownScheme(s.to_string()))
                }
            }
        }
    }
}

/// Half-spectrum multipliers of one stage.
#[derive(Debug, Clone)]
struct Stage {
    base: Vec<f64>,
    coupling: Vec<Option<Vec<f64>>>,
}

/// A scheme bound to a grid, model parameters and a time step.
#[derive(Debug, Clone)]
pub struct Stepper {
    ops: Operators,
    kind: SchemeKind,
    tau: f64,
    /// Multiplier producing stage 0 from `û_0`; identity when absent.
    initial: Option<Vec<f64>>,
    stages: Vec<Stage>,
}

impl Stepper {
    pub fn new(grid: &Grid, params: ModelParams, kind: SchemeKind, tau: f64) -> Result<Self, StepError> {
        Self::with_operators(Operators::new(grid, params), kind, tau)
    }

    pub fn with_operators(ops: Operators, kind: SchemeKind, tau: f64) -> Result<Self, StepError> {
        let mut stepper = Self {
            ops,
            kind,
            tau: f64::NAN,
            initial: None,
            stages: Vec::new(),
        };
        stepper.set_tau(tau)?;
        Ok(stepper)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn kind(&self) -> &SchemeKind {
        &self.kind
    }

    pub fn operators(&self) -> &Operators {
        &self.ops
    }

    pub fn grid(&self) -> &Grid {
        self.ops.grid()
    }

    /// Recomputes the stage multipliers for a new step size. A no-op when the
    /// size is unchanged.
    pub fn set_tau(&mut self, tau: f64) -> Result<(), StepError> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(StepError::Tau(tau));
        }
        if tau == self.tau {
            return Ok(());
        }
        let lam = self.ops.laplacian.half();
        let ell = self.ops.l_kappa.half();
        let per_mode = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
            lam.iter().zip(ell).map(|(&l, &e)| f(l, e)).collect()
        };
        let (initial, stages) = match &self.kind {
            SchemeKind::Efrk(t) => {
                let stages = (1..=t.stages())
                    .map(|i| {
                        let ci = t.c[i];
                        Stage {
                            base: per_mode(&|_, e| 1.0 / phi(i, -ci * tau * e)),
                            coupling: (0..i)
                                .map(|j| {
                                    let a = t.coeff(i, j);
                                    let cj = t.c[j];
                                    (a != 0.0).then(|| {
                                        per_mode(&|l, e| {
                                            tau * a * l * phi(j, -cj * tau * e) / phi(i, -ci * tau * e)
                                        })
                                    })
                                })
                                .collect(),
                        }
                    })
                    .collect();
                (None, stages)
            }
            SchemeKind::Ifrk(t) => {
                let stages = (1..=t.stages())
                    .map(|i| {
                        let ci = t.c[i];
                        Stage {
                            base: per_mode(&|_, e| (ci * tau * e).exp()),
                            coupling: (0..i)
                                .map(|j| {
                                    let a = t.coeff(i, j);
                                    let cj = t.c[j];
                                    (a != 0.0).then(|| {
                                        per_mode(&|l, e| tau * a * l * ((ci - cj) * tau * e).exp())
                                    })
                                })
                                .collect(),
                        }
                    })
                    .collect();
                (None, stages)
            }
            SchemeKind::LieTrotter => {
                let stage = Stage {
                    base: per_mode(&|_, e| (tau * e).exp()),
                    coupling: vec![Some(per_mode(&|l, e| tau * l * (tau * e).exp()))],
                };
                (None, vec![stage])
            }
            SchemeKind::Strang => {
                let half = per_mode(&|_, e| (0.5 * tau * e).exp());
                let predictor = Stage {
                    base: half.clone(),
                    coupling: vec![Some(per_mode(&|l, _| tau * l))],
                };
                let mix = per_mode(&|l, e| 0.5 * tau * l * (0.5 * tau * e).exp());
                let corrector = Stage {
                    base: per_mode(&|_, e| (tau * e).exp()),
                    coupling: vec![Some(mix.clone()), Some(mix)],
                };
                (Some(half), vec![predictor, corrector])
            }
        };
        self.tau = tau;
        self.initial = initial;
        self.stages = stages;
        Ok(())
    }

    /// Advances `u` by one step of size [`Stepper::tau`].
    pub fn step(&self, u: &RealField) -> Result<RealField, StepError> {
        let grid = self.ops.grid();
        if u.grid() != grid {
            return Err(StepError::GridMismatch);
        }
        let half_len = grid.half_len();
        let zero = Complex64::new(0.0, 0.0);
        let mut u_hat = vec![zero; half_len];
        grid.forward_half(u.values(), &mut u_hat);

        let mut work = vec![zero; half_len];
        let mut current = match &self.initial {
            None => u.values().to_vec(),
            Some(m) => {
                for ((w, &x), &f) in work.iter_mut().zip(&u_hat).zip(m) {
                    *w = x * f;
                }
                let mut out = vec![0.0; grid.len()];
                grid.inverse_half(&mut work, &mut out);
                check_finite(&out, 0)?;
                out
            }
        };

        let p = &self.ops.params;
        let mut g_hats: Vec<Vec<Complex64>> = Vec::with_capacity(self.stages.len());
        let mut reaction = vec![0.0; grid.len()];
        for (k, stage) in self.stages.iter().enumerate() {
            for (r, &v) in reaction.iter_mut().zip(&current) {
                *r = p.nonlinearity(v) - p.kappa * v;
            }
            let mut g_hat = vec![zero; half_len];
            grid.forward_half(&reaction, &mut g_hat);
            g_hats.push(g_hat);

            for ((w, &x), &f) in work.iter_mut().zip(&u_hat).zip(&stage.base) {
                *w = x * f;
            }
            for (coupling, g_hat) in stage.coupling.iter().zip(&g_hats) {
                if let Some(m) = coupling {
                    for ((w, &g), &f) in work.iter_mut().zip(g_hat).zip(m) {
                        *w += g * f;
                    }
                }
            }
            grid.inverse_half(&mut work, &mut current);
            check_finite(&current, k + 1)?;
        }
        Ok(RealField::new(grid, current).expect("length matches grid"))
    }
}

fn check_finite(values: &[f64], stage: usize) -> Result<(), StepError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StepError::NonFinite { stage })
    }
}

fn one_step(kind: SchemeKind, u: &RealField, params: &ModelParams, tau: f64) -> Result<RealField, StepError> {
    Stepper::new(u.grid(), *params, kind, tau)?.step(u)
}

/// One EFRK step. Builds the stage multipliers on every call; use a
/// [`Stepper`] for repeated steps.
pub fn efrk_step(u: &RealField, tableau: &ButcherTableau, params: &ModelParams, tau: f64) -> Result<RealField, StepError> {
    one_step(SchemeKind::Efrk(tableau.clone()), u, params, tau)
}

/// One integrating-factor RK step.
pub fn ifrk_step(u: &RealField, tableau: &ButcherTableau, params: &ModelParams, tau: f64) -> Result<RealField, StepError> {
    one_step(SchemeKind::Ifrk(tableau.clone()), u, params, tau)
}

/// One Lie–Trotter splitting step.
pub fn lie_trotter_step(u: &RealField, params: &ModelParams, tau: f64) -> Result<RealField, StepError> {
    one_step(SchemeKind::LieTrotter, u, params, tau)
}

/// One Strang splitting step.
pub fn strang_step(u: &RealField, params: &ModelParams, tau: f64) -> Result<RealField, StepError> {
    one_step(SchemeKind::Strang, u, params, tau)
}
