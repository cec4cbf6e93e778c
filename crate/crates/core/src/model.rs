//! Double-well potential, its quadratic truncation, and the stabilized
//! splitting of the semi-discrete vector field
//!
//! ```text
//! Δ_N(−ε² Δ_N u + f(u)) = L_κ u + N_κ(u),
//! L_κ = Δ_N(−ε² Δ_N + κ),   N_κ(u) = Δ_N(f(u) − κ u).
//! ```

use serde::{Deserialize, Serialize};

use crate::spectral::{self, Grid, RealField, SpectralError, Symbol};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model parameter {name} = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("field contains non-finite values")]
    NonFinite,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Default truncation bound `√15 / 3`, for which `(3β² − 1)/2 = 2`.
pub fn default_beta() -> f64 {
    15f64.sqrt() / 3.0
}

fn default_kappa() -> f64 {
    2.0
}

fn default_truncate() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub epsilon2: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_truncate")]
    pub truncate: bool,
}

impl ModelParams {
    /// Parameters with the given `ε²` and the defaults κ = 2, β = √15/3,
    /// truncation on.
    pub fn new(epsilon2: f64) -> Self {
        Self {
            epsilon2,
            kappa: default_kappa(),
            beta: default_beta(),
            truncate: default_truncate(),
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_truncation(mut self, truncate: bool) -> Self {
        self.truncate = truncate;
        self
    }

    /// Checks the parameter ranges and returns warnings for admissible but
    /// questionable settings.
    pub fn validate(&self) -> Result<Vec<String>, ModelError> {
        if !(self.epsilon2.is_finite() && self.epsilon2 > 0.0) {
            return Err(ModelError::InvalidParam {
                name: "epsilon2",
                value: self.epsilon2,
                reason: "must be positive",
            });
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(ModelError::InvalidParam {
                name: "kappa",
                value: self.kappa,
                reason: "must be non-negative",
            });
        }
        if !(self.beta.is_finite() && self.beta > 1.0) {
            return Err(ModelError::InvalidParam {
                name: "beta",
                value: self.beta,
                reason: "must exceed 1",
            });
        }
        let mut warnings = Vec::new();
        if self.truncate {
            let needed = self.kappa_threshold();
            if self.kappa < needed * (1.0 - 1e-12) {
                let msg = format!(
                    "kappa = {} is below (3 beta^2 - 1)/2 = {needed}; unconditional energy stability is not guaranteed",
                    self.kappa
                );
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
        Ok(warnings)
    }

    /// `max_{|ξ| ≤ β} |f′(ξ)| / 2 = (3β² − 1)/2`.
    pub fn kappa_threshold(&self) -> f64 {
        0.5 * (3.0 * self.beta * self.beta - 1.0)
    }

    /// Double-well potential `F`, or its truncation `F̃` when enabled.
    pub fn potential(&self, u: f64) -> f64 {
        let b = self.beta;
        if self.truncate && u.abs() > b {
            let b2 = b * b;
            0.5 * (3.0 * b2 - 1.0) * u * u - 2.0 * b2 * b * u.abs() + 0.25 * (3.0 * b2 * b2 + 1.0)
        } else {
            let w = u * u - 1.0;
            0.25 * w * w
        }
    }

    /// `f = F′`, or the truncated `f̃` when enabled.
    pub fn nonlinearity(&self, u: f64) -> f64 {
        let b = self.beta;
        if self.truncate && u.abs() > b {
            (3.0 * b * b - 1.0) * u - 2.0 * b * b * b * u.signum()
        } else {
            u * u * u - u
        }
    }

    /// `f′` (or `f̃′`).
    pub fn nonlinearity_derivative(&self, u: f64) -> f64 {
        let b = self.beta;
        if self.truncate && u.abs() > b {
            3.0 * b * b - 1.0
        } else {
            3.0 * u * u - 1.0
        }
    }
}

/// Per-mode values `λ(−ε² λ + κ)` of `L_κ`, where `λ` is the Laplacian symbol.
pub fn l_kappa_symbol(laplacian: &Symbol, params: &ModelParams) -> Symbol {
    laplacian
        .map(|lam| lam * (-params.epsilon2 * lam + params.kappa))
        .expect("finite for finite parameters")
}

/// The splitting operators on one grid, with their symbols precomputed.
#[derive(Debug, Clone)]
pub struct Operators {
    pub params: ModelParams,
    pub laplacian: Symbol,
    pub l_kappa: Symbol,
}

impl Operators {
    pub fn new(grid: &Grid, params: ModelParams) -> Self {
        let laplacian = spectral::laplacian_symbol(grid);
        let l_kappa = l_kappa_symbol(&laplacian, &params);
        Self {
            params,
            laplacian,
            l_kappa,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.laplacian.grid()
    }

    /// Pointwise `f(u) − κu`, the argument of `Δ_N` in `N_κ`.
    pub fn reaction(&self, u: &RealField) -> RealField {
        let p = &self.params;
        u.map(|v| p.nonlinearity(v) - p.kappa * v)
    }

    pub fn apply_l(&self, u: &RealField) -> Result<RealField, ModelError> {
        Ok(spectral::apply_symbol(&self.l_kappa, u)?)
    }

    pub fn apply_n(&self, u: &RealField) -> Result<RealField, ModelError> {
        if !u.is_finite() {
            return Err(ModelError::NonFinite);
        }
        Ok(spectral::apply_symbol(&self.laplacian, &self.reaction(u))?)
    }

    /// `L_κ u + N_κ(u)`.
    pub fn vector_field(&self, u: &RealField) -> Result<RealField, ModelError> {
        let l = self.apply_l(u)?;
        let n = self.apply_n(u)?;
        Ok(l.axpy(1.0, &n)?)
    }

    /// Discrete chemical potential `−ε² Δ_N u + f(u)` (untruncated parts
    /// follow the truncation flag).
    pub fn chemical_potential(&self, u: &RealField) -> Result<RealField, ModelError> {
        let lap = spectral::apply_symbol(&self.laplacian, u)?;
        let p = &self.params;
        let values = lap
            .values()
            .iter()
            .zip(u.values())
            .map(|(l, &v)| -p.epsilon2 * l + p.nonlinearity(v))
            .collect();
        Ok(RealField::new(u.grid(), values)?)
    }
}

/// `N_κ(u) = Δ_N(f(u) − κu)` on the field's grid.
pub fn apply_n_kappa(u: &RealField, params: &ModelParams) -> Result<RealField, ModelError> {
    Operators::new(u.grid(), *params).apply_n(u)
}
