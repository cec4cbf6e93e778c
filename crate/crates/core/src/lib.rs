//! Exponential-free Runge–Kutta (EFRK) time stepping for the Cahn–Hilliard
//! equation
//!
//! ```text
//! u_t = Δ(−ε² Δu + f(u)),   f(u) = u³ − u,
//! ```
//!
//! on periodic boxes with a Fourier pseudo-spectral discretization.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: grids, transforms and diagonal operators.
//! * [`model`]: the double-well potential, its quadratic truncation and the
//!   stabilized splitting `L_κ u + N_κ(u)`.
//! * [`taylor`]: the Taylor polynomials `φ_k` and their application per mode.
//! * [`schemes`]: Butcher tableaux, condition checkers and one-step maps for
//!   EFRK, integrating-factor RK and operator splitting.
//! * [`stability`]: energy-stability coefficients and the linear stability
//!   function.
//! * [`diagnostics`]: energy, mass and norms.
//! * [`driver`]: time loops with uniform or energy-adaptive steps.

pub mod diagnostics;
pub mod driver;
pub mod model;
pub mod schemes;
pub mod spectral;
pub mod stability;
pub mod taylor;

pub use diagnostics::{energy, mass, norm_l2, norm_linf, TimeSeriesRecord};
pub use driver::{AdaptiveParams, DriverError, InitialCondition, RunConfig, RunOutput, StepControl};

pub use model::{ModelError, ModelParams};
pub use schemes::{ButcherTableau, SchemeKind, StepError, Stepper};
pub use spectral::{Grid, RealField, SpectralError, SpectralField, Symbol};

pub use rustfft::num_complex::Complex64;
