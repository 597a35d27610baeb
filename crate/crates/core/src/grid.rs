//! Periodic square grid with its Fourier mode bookkeeping.
//!
//! The domain is `(0, L)^2` sampled at `M` equispaced points per direction,
//! `x_i = i * L/M` for `i = 0..M-1` (the endpoint is the periodic image of 0).
//! Spectral indices follow the usual FFT layout: array index `i` holds mode
//! `k = i` for `i < M/2` and `k = i - M` otherwise, so modes run over
//! `-M/2 ..= M/2 - 1`. The physical wavenumber of mode `k` is `kappa = 2*pi*k/L`.

use crate::error::{PfcError, Result};

/// Square periodic grid: side length `L`, `M` samples per direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    m: usize,
    length: f64,
}

impl GridSpec {
    /// `m` must be even and at least 4; `length` positive and finite.
    pub fn new(m: usize, length: f64) -> Result<Self> {
        if m < 4 || m % 2 != 0 {
            return Err(PfcError::InvalidGrid(format!(
                "M must be an even integer >= 4, got {m}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(PfcError::InvalidGrid(format!(
                "domain length must be positive and finite, got {length}"
            )));
        }
        Ok(Self { m, length })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of samples, `M^2`.
    pub fn points(&self) -> usize {
        self.m * self.m
    }

    /// Grid spacing `h = L/M`.
    pub fn spacing(&self) -> f64 {
        self.length / self.m as f64
    }

    /// Quadrature weight of one sample, `h^2`.
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Physical coordinate of sample `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Signed integer mode of array index `i` (in `-M/2 ..= M/2-1`).
    pub fn mode(&self, i: usize) -> i64 {
        debug_assert!(i < self.m);
        if i < self.m / 2 {
            i as i64
        } else {
            i as i64 - self.m as i64
        }
    }

    /// Physical wavenumber `kappa = 2*pi*k/L` of integer mode `k`.
    pub fn wavenumber(&self, k: i64) -> f64 {
        2.0 * std::f64::consts::PI * k as f64 / self.length
    }

    /// `|kappa|^2` for the coefficient at array index `(ix, iy)`.
    pub fn kappa_sq(&self, ix: usize, iy: usize) -> f64 {
        let kx = self.wavenumber(self.mode(ix));
        let ky = self.wavenumber(self.mode(iy));
        kx * kx + ky * ky
    }

    /// True if array index `i` holds the unpaired Nyquist mode `-M/2`.
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.m / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_tiny_m() {
        assert!(GridSpec::new(5, 1.0).is_err());
        assert!(GridSpec::new(2, 1.0).is_err());
        assert!(GridSpec::new(4, 1.0).is_ok());
    }

    #[test]
    fn rejects_bad_length() {
        assert!(GridSpec::new(8, 0.0).is_err());
        assert!(GridSpec::new(8, -3.0).is_err());
        assert!(GridSpec::new(8, f64::NAN).is_err());
    }

    #[test]
    fn mode_map_is_symmetric_below_nyquist() {
        let g = GridSpec::new(8, 32.0).unwrap();
        assert_eq!(g.mode(0), 0);
        assert_eq!(g.mode(1), 1);
        assert_eq!(g.mode(3), 3);
        assert_eq!(g.mode(4), -4); // Nyquist
        assert_eq!(g.mode(7), -1);
        // kappa(0) = 0 and kappa(-k) = -kappa(k)
        assert_eq!(g.wavenumber(0), 0.0);
        for k in 1..4 {
            assert_eq!(g.wavenumber(-k), -g.wavenumber(k));
        }
    }

    #[test]
    fn spacing_and_area() {
        let g = GridSpec::new(64, 32.0).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.cell_area(), 0.25);
        assert_eq!(g.coord(3), 1.5);
    }
}
