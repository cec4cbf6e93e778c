//! Periodic box grids, discrete Fourier transforms and diagonal operators.
//!
//! Grid functions are stored in physical space with the first axis varying
//! fastest. The forward transform carries the `1/N` normalization,
//!
//! ```text
//! u_hat[l] = (1/N) * sum_j u[j] * exp(-i 2 pi l j / N),   u[j] = sum_l u_hat[l] * exp(i 2 pi l j / N),
//! ```
//!
//! applied axis by axis. Operators that are diagonal in the Fourier basis
//! (the discrete Laplacian and every function of it) are represented by a
//! [`Symbol`], one real value per mode. Symbols are even in the mode index,
//! so applying one to a real field goes through a real-to-complex transform
//! of the first axis and only touches half of the spectrum.

use std::fmt;
use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

/// Largest imaginary residue (relative to the real part) tolerated when a
/// spectrum is brought back to a real field.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("grid dimension must be 1, 2 or 3, got {0}")]
    Dimension(usize),
    #[error("grid description has {n} mode counts, {lower} lower and {upper} upper bounds")]
    AxisCount { n: usize, lower: usize, upper: usize },
    #[error("axis {axis}: mode count N = {n} must be even and at least 4")]
    ModeCount { axis: usize, n: usize },
    #[error("axis {axis}: bounds must satisfy a < b, got a = {lower}, b = {upper}")]
    Bounds { axis: usize, lower: f64, upper: f64 },
    #[error("expected {expected} values for this grid, got {got}")]
    Length { expected: usize, got: usize },
    #[error("field and operator are defined on different grids")]
    GridMismatch,
    #[error("symbol is not even in the mode index (mode {0})")]
    NotEven(usize),
    #[error("symbol map produced a non-finite value at mode {0}")]
    NonFiniteSymbol(usize),
    #[error("spectrum is not Hermitian: imaginary residue {0:e} relative to the real part")]
    NotHermitian(f64),
}

/// One periodic direction `[lower, upper)` sampled at `n` equispaced points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
}

impl Axis {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn spacing(&self) -> f64 {
        self.length() / self.n as f64
    }

    /// Base wavenumber `2 pi / (b - a)`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length()
    }

    pub fn point(&self, j: usize) -> f64 {
        self.lower + j as f64 * self.spacing()
    }
}

struct Plans {
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

struct GridInner {
    axes: Vec<Axis>,
    len: usize,
    plans: Plans,
}

/// A periodic box in one to three dimensions, together with its FFT plans.
///
/// Cloning is cheap; clones share the plans.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("axes", &self.inner.axes).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.axes == other.inner.axes
    }
}

impl Grid {
    pub fn new(n: &[usize], lower: &[f64], upper: &[f64]) -> Result<Self, SpectralError> {
        if n.len() != lower.len() || n.len() != upper.len() {
            return Err(SpectralError::AxisCount {
                n: n.len(),
                lower: lower.len(),
                upper: upper.len(),
            });
        }
        let axes = n
            .iter()
            .zip(lower.iter().zip(upper))
            .map(|(&n, (&lower, &upper))| Axis { n, lower, upper })
            .collect();
        Self::from_axes(axes)
    }

    /// Same mode count and interval along every axis.
    pub fn cube(dim: usize, n: usize, lower: f64, upper: f64) -> Result<Self, SpectralError> {
        Self::from_axes(vec![Axis { n, lower, upper }; dim])
    }

    pub fn from_axes(axes: Vec<Axis>) -> Result<Self, SpectralError> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(SpectralError::Dimension(axes.len()));
        }
        for (k, axis) in axes.iter().enumerate() {
            if axis.n < 4 || axis.n % 2 != 0 {
                return Err(SpectralError::ModeCount { axis: k, n: axis.n });
            }
            if !(axis.lower.is_finite() && axis.upper.is_finite() && axis.lower < axis.upper) {
                return Err(SpectralError::Bounds {
                    axis: k,
                    lower: axis.lower,
                    upper: axis.upper,
                });
            }
        }
        let mut real_planner = RealFftPlanner::<f64>::new();
        let mut planner = FftPlanner::<f64>::new();
        let plans = Plans {
            r2c: real_planner.plan_fft_forward(axes[0].n),
            c2r: real_planner.plan_fft_inverse(axes[0].n),
            forward: axes.iter().map(|a| planner.plan_fft_forward(a.n)).collect(),
            inverse: axes.iter().map(|a| planner.plan_fft_inverse(a.n)).collect(),
        };
        let len = axes.iter().map(|a| a.n).product();
        Ok(Self {
            inner: Arc::new(GridInner { axes, len, plans }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.axes.len()
    }

    /// Total number of points `N`.
    pub fn len(&self) -> usize {
        self.inner.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn axes(&self) -> &[Axis] {
        &self.inner.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.inner.axes[k]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.inner.axes.iter().map(|a| a.n).collect()
    }

    /// `|Omega|`, the product of the side lengths.
    pub fn volume(&self) -> f64 {
        self.inner.axes.iter().map(Axis::length).product()
    }

    /// Quadrature weight `prod h_k` of the discrete inner product.
    pub fn cell_volume(&self) -> f64 {
        self.inner.axes.iter().map(Axis::spacing).product()
    }

    /// Splits a flat index into per-axis indices (first axis fastest).
    pub fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for (k, axis) in self.inner.axes.iter().enumerate() {
            idx[k] = flat % axis.n;
            flat /= axis.n;
        }
        idx
    }

    /// Coordinates of the grid point with flat index `flat`; unused axes are 0.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for (k, axis) in self.inner.axes.iter().enumerate() {
            x[k] = axis.point(idx[k]);
        }
        x
    }

    /// Samples `f` at every grid point.
    pub fn sample(&self, mut f: impl FnMut([f64; 3]) -> f64) -> RealField {
        let values = (0..self.len()).map(|j| f(self.point(j))).collect();
        RealField {
            grid: self.clone(),
            values,
        }
    }

    /// Number of coefficients kept by the half-spectrum layout.
    pub(crate) fn half_len(&self) -> usize {
        self.half_row() * self.len() / self.inner.axes[0].n
    }

    pub(crate) fn half_row(&self) -> usize {
        self.inner.axes[0].n / 2 + 1
    }

    /// Runs the complex transform along `axes`, for data laid out with a
    /// first-axis row of `row` entries followed by the remaining grid axes.
    fn transform_axes(&self, data: &mut [Complex64], row: usize, first_axis: usize, inverse: bool) {
        let plans = &self.inner.plans;
        let dims: Vec<usize> = std::iter::once(row)
            .chain(self.inner.axes[1..].iter().map(|a| a.n))
            .collect();
        let mut buf = Vec::new();
        for k in first_axis..dims.len() {
            let fft = if inverse {
                &plans.inverse[k]
            } else {
                &plans.forward[k]
            };
            let nk = dims[k];
            let stride: usize = dims[..k].iter().product();
            let block = stride * nk;
            let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            buf.resize(block, Complex64::new(0.0, 0.0));
            for chunk in data.chunks_exact_mut(block) {
                for p in 0..stride {
                    for i in 0..nk {
                        buf[p * nk + i] = chunk[p + stride * i];
                    }
                }
                fft.process_with_scratch(&mut buf, &mut scratch);
                for p in 0..stride {
                    for i in 0..nk {
                        chunk[p + stride * i] = buf[p * nk + i];
                    }
                }
            }
        }
    }

    /// Normalized forward transform of real samples into the half spectrum
    /// (first-axis modes `0..=N1/2`, all modes along the other axes).
    pub(crate) fn forward_half(&self, input: &[f64], out: &mut [Complex64]) {
        let n1 = self.inner.axes[0].n;
        let row = self.half_row();
        debug_assert_eq!(input.len(), self.len());
        debug_assert_eq!(out.len(), self.half_len());
        let r2c = &self.inner.plans.r2c;
        let mut line = r2c.make_input_vec();
        let mut scratch = r2c.make_scratch_vec();
        for (src, dst) in input.chunks_exact(n1).zip(out.chunks_exact_mut(row)) {
            line.copy_from_slice(src);
            r2c.process_with_scratch(&mut line, dst, &mut scratch)
                .expect("buffer lengths come from the plan");
        }
        self.transform_axes(out, row, 1, false);
        let scale = 1.0 / self.len() as f64;
        for c in out.iter_mut() {
            *c *= scale;
        }
    }

    /// Inverse of [`Grid::forward_half`]. `spec` is used as scratch.
    pub(crate) fn inverse_half(&self, spec: &mut [Complex64], out: &mut [f64]) {
        let n1 = self.inner.axes[0].n;
        let row = self.half_row();
        debug_assert_eq!(spec.len(), self.half_len());
        debug_assert_eq!(out.len(), self.len());
        self.transform_axes(spec, row, 1, true);
        let c2r = &self.inner.plans.c2r;
        let mut scratch = c2r.make_scratch_vec();
        for (src, dst) in spec.chunks_exact_mut(row).zip(out.chunks_exact_mut(n1)) {
            // Rows of a real field have real mean and Nyquist bins; whatever
            // is left there is round-off.
            src[0].im = 0.0;
            src[row - 1].im = 0.0;
            c2r.process_with_scratch(src, dst, &mut scratch)
                .expect("buffer lengths come from the plan");
        }
    }
}

/// A grid function in physical space.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::Length {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![value; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Pointwise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &RealField) -> Result<Self, SpectralError> {
        same_grid(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        })
    }

    /// Largest pointwise difference to `other`.
    pub fn max_abs_diff(&self, other: &RealField) -> Result<f64, SpectralError> {
        same_grid(&self.grid, &other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Full complex spectrum of a grid function, ordered like the physical samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.len() {
            return Err(SpectralError::Length {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }
}

fn same_grid(a: &Grid, b: &Grid) -> Result<(), SpectralError> {
    if a == b {
        Ok(())
    } else {
        Err(SpectralError::GridMismatch)
    }
}

/// Normalized forward DFT over all axes.
pub fn forward(field: &RealField) -> SpectralField {
    let grid = &field.grid;
    let mut coeffs: Vec<Complex64> = field
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    grid.transform_axes(&mut coeffs, grid.axis(0).n, 0, false);
    let scale = 1.0 / grid.len() as f64;
    for c in coeffs.iter_mut() {
        *c *= scale;
    }
    SpectralField {
        grid: grid.clone(),
        coeffs,
    }
}

/// Unnormalized inverse DFT; the result must be real up to round-off.
pub fn inverse(spectrum: &SpectralField) -> Result<RealField, SpectralError> {
    let values = inverse_complex(spectrum);
    let re_max = values.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let im_max = values.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if im_max > HERMITIAN_TOLERANCE * re_max.max(f64::MIN_POSITIVE) && im_max > 0.0 {
        return Err(SpectralError::NotHermitian(
            im_max / re_max.max(f64::MIN_POSITIVE),
        ));
    }
    Ok(RealField {
        grid: spectrum.grid.clone(),
        values: values.into_iter().map(|c| c.re).collect(),
    })
}

/// Unnormalized inverse DFT keeping the imaginary parts.
pub fn inverse_complex(spectrum: &SpectralField) -> Vec<Complex64> {
    let grid = &spectrum.grid;
    let mut values = spectrum.coeffs.clone();
    grid.transform_axes(&mut values, grid.axis(0).n, 0, true);
    values
}

/// Per-mode values of an operator that is diagonal in the Fourier basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    grid: Grid,
    values: Vec<f64>,
    half: Vec<f64>,
}

impl Symbol {
    /// Builds a symbol from its values in the full spectral ordering. The
    /// values must be even, `s(l) = s(-l)`, so that real fields map to real
    /// fields.
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::Length {
                expected: grid.len(),
                got: values.len(),
            });
        }
        let shape = grid.shape();
        for (flat, &v) in values.iter().enumerate() {
            let idx = grid.multi_index(flat);
            let mut mirror = 0;
            let mut stride = 1;
            for (k, &n) in shape.iter().enumerate() {
                mirror += ((n - idx[k]) % n) * stride;
                stride *= n;
            }
            let w = values[mirror];
            if (v - w).abs() > 1e-12 * v.abs().max(w.abs()) {
                return Err(SpectralError::NotEven(flat));
            }
        }
        let n1 = shape[0];
        let row = grid.half_row();
        let half = values
            .chunks_exact(n1)
            .flat_map(|line| line[..row].iter().copied())
            .collect();
        Ok(Self {
            grid: grid.clone(),
            values,
            half,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Symbol values on the half-spectrum layout used by the fast path.
    pub(crate) fn half(&self) -> &[f64] {
        &self.half
    }

    /// `g` applied to every mode.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> Result<Symbol, SpectralError> {
        let values: Vec<f64> = self.values.iter().map(|&s| g(s)).collect();
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(SpectralError::NonFiniteSymbol(bad));
        }
        let half = self.half.iter().map(|&s| g(s)).collect();
        Ok(Symbol {
            grid: self.grid.clone(),
            values,
            half,
        })
    }
}

/// One-dimensional eigenvalues of the spectral second derivative, with the
/// `N/2` mode averaged over its two aliases.
pub fn laplacian_symbol_1d(axis: &Axis) -> Vec<f64> {
    let n = axis.n;
    let mu = axis.wavenumber();
    (0..n)
        .map(|l| {
            let lo = l as f64;
            let hi = l as f64 - n as f64;
            if 2 * l < n {
                -(mu * lo).powi(2)
            } else if 2 * l == n {
                0.5 * -(mu * lo).powi(2) + 0.5 * -(mu * hi).powi(2)
            } else {
                -(mu * hi).powi(2)
            }
        })
        .collect()
}

/// Symbol of the discrete Laplacian: the Kronecker sum of the per-axis
/// eigenvalues.
pub fn laplacian_symbol(grid: &Grid) -> Symbol {
    let per_axis: Vec<Vec<f64>> = grid.axes().iter().map(laplacian_symbol_1d).collect();
    let values = (0..grid.len())
        .map(|flat| {
            let idx = grid.multi_index(flat);
            per_axis
                .iter()
                .enumerate()
                .map(|(k, sym)| sym[idx[k]])
                .sum()
        })
        .collect();
    Symbol::new(grid, values).expect("Kronecker sums of even 1D symbols are even")
}

/// Applies the diagonal operator `sym` to `field`.
pub fn apply_symbol(sym: &Symbol, field: &RealField) -> Result<RealField, SpectralError> {
    apply_multipliers(sym.grid(), sym.half(), field)
}

/// Applies the diagonal operator `g(sym)` to `field`.
pub fn apply_symbol_map(
    sym: &Symbol,
    g: impl Fn(f64) -> f64,
    field: &RealField,
) -> Result<RealField, SpectralError> {
    let mut multipliers = Vec::with_capacity(sym.half().len());
    for (i, &s) in sym.half().iter().enumerate() {
        let m = g(s);
        if !m.is_finite() {
            return Err(SpectralError::NonFiniteSymbol(i));
        }
        multipliers.push(m);
    }
    apply_multipliers(sym.grid(), &multipliers, field)
}

pub(crate) fn apply_multipliers(
    grid: &Grid,
    half: &[f64],
    field: &RealField,
) -> Result<RealField, SpectralError> {
    same_grid(grid, &field.grid)?;
    let mut spec = vec![Complex64::new(0.0, 0.0); grid.half_len()];
    grid.forward_half(&field.values, &mut spec);
    for (c, &m) in spec.iter_mut().zip(half) {
        *c *= m;
    }
    let mut values = vec![0.0; grid.len()];
    grid.inverse_half(&mut spec, &mut values);
    Ok(RealField {
        grid: field.grid.clone(),
        values,
    })
}

/// Removes the mean (the zero mode).
pub fn project_zero_mean(field: &RealField) -> RealField {
    let mean = field.mean();
    field.map(|v| v - mean)
}
