//! Taylor polynomials `φ_k(z) = Σ_{j ≤ k} z^j / j!` of the exponential, and
//! their application to fields through the `L_κ` symbol.
//!
//! With `ℓ ≤ 0` an `L_κ` eigenvalue, the per-mode argument is `−cτℓ ≥ 0`, so
//! every `φ_k` value is at least one and dividing by it never amplifies.

use crate::spectral::{self, RealField, SpectralError, Symbol};
use crate::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaylorError {
    #[error("time step must be positive and finite, got {0}")]
    Tau(f64),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// `φ_k(z)` by Horner's rule.
pub fn phi(k: usize, z: f64) -> f64 {
    let mut p = 1.0;
    for j in (1..=k).rev() {
        p = 1.0 + z * p / j as f64;
    }
    p
}

/// `φ_k(z)` for complex arguments.
pub fn phi_complex(k: usize, z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let mut p = one;
    for j in (1..=k).rev() {
        p = one + z * p / j as f64;
    }
    p
}

fn check_tau(tau: f64) -> Result<(), TaylorError> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(TaylorError::Tau(tau))
    }
}

/// Multiplies every mode by `φ_k(−cτℓ)`.
pub fn apply_phi(
    k: usize,
    c: f64,
    tau: f64,
    l_kappa: &Symbol,
    field: &RealField,
) -> Result<RealField, TaylorError> {
    check_tau(tau)?;
    Ok(spectral::apply_symbol_map(l_kappa, |l| phi(k, -c * tau * l), field)?)
}

/// Divides every mode by `φ_k(−cτℓ)`.
pub fn apply_phi_inverse(
    k: usize,
    c: f64,
    tau: f64,
    l_kappa: &Symbol,
    field: &RealField,
) -> Result<RealField, TaylorError> {
    check_tau(tau)?;
    Ok(spectral::apply_symbol_map(l_kappa, |l| 1.0 / phi(k, -c * tau * l), field)?)
}

/// Multiplies every mode by `e^{cτℓ}`.
pub fn apply_exp(
    c: f64,
    tau: f64,
    l_kappa: &Symbol,
    field: &RealField,
) -> Result<RealField, TaylorError> {
    check_tau(tau)?;
    Ok(spectral::apply_symbol_map(l_kappa, |l| (c * tau * l).exp(), field)?)
}
