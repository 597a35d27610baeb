//! Real fields on the periodic grid and their spectral counterparts.
//!
//! Storage is row-major with x fastest: `values[iy * M + ix] = f(x_ix, y_iy)`.
//! A `Field` is immutable once constructed; operators return new fields.

use rustfft::num_complex::Complex64;

use crate::error::{PfcError, Result};
use crate::grid::GridSpec;

/// Real-valued samples of a periodic function on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    /// Wraps raw samples; checks length and finiteness.
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(PfcError::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.points(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PfcError::NonFinite {
                context: "field samples",
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.points()],
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.points()])
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let m = grid.m();
        let mut values = Vec::with_capacity(grid.points());
        for iy in 0..m {
            let y = grid.coord(iy);
            for ix in 0..m {
                values.push(f(grid.coord(ix), y));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.m() + ix]
    }

    /// Arithmetic mean of the samples, `(1/M^2) * sum`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Pointwise map producing a new field; the result is re-checked.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// `alpha * self + beta * other`.
    pub fn axpy(&self, alpha: f64, other: &Field, beta: f64) -> Result<Self> {
        same_grid(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| alpha * a + beta * b)
            .collect();
        Self::new(self.grid, values)
    }
}

/// Complex Fourier coefficients paired with their grid.
///
/// Index layout matches [`Field`]: `coeffs[iy * M + ix]` holds the mode
/// `(k, l) = (grid.mode(ix), grid.mode(iy))`. Forward transform is the plain
/// unscaled DFT sum; the inverse divides by `M^2`.
#[derive(Debug, Clone)]
pub struct SpectralCoeffs {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralCoeffs {
    pub fn new(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.points() {
            return Err(PfcError::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                grid.points(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::default(); grid.points()],
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of integer modes `(k, l)`, each in `-M/2 ..= M/2-1`.
    pub fn mode(&self, k: i64, l: i64) -> Complex64 {
        let m = self.grid.m() as i64;
        debug_assert!(-m / 2 <= k && k < m / 2 && -m / 2 <= l && l < m / 2);
        let ix = k.rem_euclid(m) as usize;
        let iy = l.rem_euclid(m) as usize;
        self.coeffs[iy * self.grid.m() + ix]
    }

    /// Zeros the unpaired Nyquist row and column (`k = -M/2` or `l = -M/2`).
    ///
    /// Applied after every nonlinear pointwise evaluation so that spectral
    /// content stays on the symmetric mode set.
    pub fn zero_nyquist(&mut self) {
        let m = self.grid.m();
        let ny = m / 2;
        for ix in 0..m {
            self.coeffs[ny * m + ix] = Complex64::default();
        }
        for iy in 0..m {
            self.coeffs[iy * m + ny] = Complex64::default();
        }
    }
}

/// Errors unless both fields share a grid.
pub fn same_grid(a: &Field, b: &Field) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(PfcError::GridMismatch {
            left: a.grid().m(),
            right: b.grid().m(),
        });
    }
    Ok(())
}
