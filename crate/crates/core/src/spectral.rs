//! Discrete Fourier transforms and the constant-coefficient operators of the
//! scheme, all diagonal in spectral space.
//!
//! Conventions (fixed project-wide):
//! - forward transform is the unscaled DFT sum
//!   `fhat(k,l) = sum_{ix,iy} f(ix,iy) exp(-2*pi*i*(k*ix + l*iy)/M)`,
//! - inverse divides by `M^2`,
//! - quadrature is the rectangle rule `h^2 * sum` (exact for trigonometric
//!   polynomials below Nyquist),
//! - hence Parseval reads `l2_inner(f, g) = (L^2/M^4) * sum_k Re(fhat * conj(ghat))`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{PfcError, Result};
use crate::field::{same_grid, Field, SpectralCoeffs};
use crate::grid::GridSpec;

/// Relative imaginary residue above which an inverse transform is rejected
/// as non-conjugate-symmetric.
const SYMMETRY_RESIDUE_TOL: f64 = 1e-10;

thread_local! {
    static PLANS: RefCell<HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>> =
        RefCell::new(HashMap::new());
}

fn with_plan<R>(m: usize, direction: FftDirection, f: impl FnOnce(&Arc<dyn Fft<f64>>) -> R) -> R {
    PLANS.with(|cell| {
        let mut map = cell.borrow_mut();
        let (fwd, inv) = map.entry(m).or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(m), planner.plan_fft_inverse(m))
        });
        match direction {
            FftDirection::Forward => f(fwd),
            FftDirection::Inverse => f(inv),
        }
    })
}

fn transpose_square(data: &mut [Complex64], m: usize) {
    for iy in 0..m {
        for ix in (iy + 1)..m {
            data.swap(iy * m + ix, ix * m + iy);
        }
    }
}

/// In-place 2-D FFT over an `m x m` row-major buffer. Unscaled in both
/// directions; callers handle normalization.
pub(crate) fn fft2_inplace(m: usize, data: &mut [Complex64], direction: FftDirection) {
    debug_assert_eq!(data.len(), m * m);
    with_plan(m, direction, |plan| {
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        for row in data.chunks_exact_mut(m) {
            plan.process_with_scratch(row, &mut scratch);
        }
        transpose_square(data, m);
        for row in data.chunks_exact_mut(m) {
            plan.process_with_scratch(row, &mut scratch);
        }
        transpose_square(data, m);
    });
}

/// Forward DFT of a real field (unscaled).
pub fn forward_transform(f: &Field) -> SpectralCoeffs {
    let m = f.grid().m();
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_inplace(m, &mut data, FftDirection::Forward);
    SpectralCoeffs::new(f.grid(), data).expect("length preserved")
}

/// Inverse DFT (divides by `M^2`); errors when the spectrum is not
/// conjugate-symmetric, i.e. the imaginary residue of the result exceeds
/// `1e-10` relative to the field magnitude.
pub fn inverse_transform(c: &SpectralCoeffs) -> Result<Field> {
    let m = c.grid().m();
    let mut data = c.coeffs().to_vec();
    fft2_inplace(m, &mut data, FftDirection::Inverse);
    let scale = 1.0 / (m * m) as f64;
    let mut max_im: f64 = 0.0;
    let mut max_re: f64 = 0.0;
    for v in &data {
        max_im = max_im.max(v.im.abs());
        max_re = max_re.max(v.re.abs());
    }
    let residue = max_im * scale / max_re.mul_add(scale, 0.0).max(1.0);
    if residue > SYMMETRY_RESIDUE_TOL {
        return Err(PfcError::AsymmetricSpectrum { residue });
    }
    Field::new(c.grid(), data.iter().map(|v| v.re * scale).collect())
}

/// Inverse DFT of a spectrum known to be conjugate-symmetric by construction
/// (spectra obtained from real fields and real diagonal symbols).
pub(crate) fn inverse_transform_unchecked(c: &SpectralCoeffs) -> Result<Field> {
    let m = c.grid().m();
    let mut data = c.coeffs().to_vec();
    fft2_inplace(m, &mut data, FftDirection::Inverse);
    let scale = 1.0 / (m * m) as f64;
    Field::new(c.grid(), data.iter().map(|v| v.re * scale).collect())
}

/// Multiplies every coefficient by a real function of the index pair.
pub(crate) fn apply_symbol_spectral(
    c: &mut SpectralCoeffs,
    symbol: impl Fn(&GridSpec, usize, usize) -> f64,
) {
    let grid = c.grid();
    let m = grid.m();
    for iy in 0..m {
        for ix in 0..m {
            c.coeffs_mut()[iy * m + ix] *= symbol(&grid, ix, iy);
        }
    }
}

fn apply_symbol(f: &Field, symbol: impl Fn(&GridSpec, usize, usize) -> f64) -> Field {
    let mut c = forward_transform(f);
    apply_symbol_spectral(&mut c, symbol);
    inverse_transform_unchecked(&c).expect("symbol application keeps samples finite")
}

/// `laplacian(f)`: spectral symbol `-|kappa|^2`.
pub fn apply_laplacian(f: &Field) -> Field {
    apply_symbol(f, |g, ix, iy| -g.kappa_sq(ix, iy))
}

/// `(laplacian + beta)^2 f`: spectral symbol `(beta - |kappa|^2)^2`.
pub fn apply_shifted_biharmonic(f: &Field, beta: f64) -> Field {
    apply_symbol(f, |g, ix, iy| {
        let s = beta - g.kappa_sq(ix, iy);
        s * s
    })
}

fn ensure_zero_mean(f: &Field) -> Result<()> {
    let mass = f.mean();
    if mass.abs() > 1e-10 * f.max_abs() {
        return Err(PfcError::NonZeroMean { mass });
    }
    Ok(())
}

/// Zero-mean inverse Laplacian: returns `psi` with `-laplacian(psi) = f` and
/// `mean(psi) = 0`. Requires `|mean(f)| <= 1e-10 * max|f|`.
pub fn apply_inverse_laplacian(f: &Field) -> Result<Field> {
    ensure_zero_mean(f)?;
    let mut c = forward_transform(f);
    let grid = c.grid();
    let m = grid.m();
    for iy in 0..m {
        for ix in 0..m {
            let idx = iy * m + ix;
            if ix == 0 && iy == 0 {
                c.coeffs_mut()[idx] = Complex64::default();
            } else {
                c.coeffs_mut()[idx] /= grid.kappa_sq(ix, iy);
            }
        }
    }
    inverse_transform_unchecked(&c)
}

/// Discrete `L^2` norm under the rectangle rule, `sqrt(h^2 * sum f^2)`.
pub fn l2_norm(f: &Field) -> f64 {
    let sum: f64 = f.values().iter().map(|&v| v * v).sum();
    (f.grid().cell_area() * sum).sqrt()
}

/// Discrete `L^2` inner product `h^2 * sum f*g`.
pub fn l2_inner(f: &Field, g: &Field) -> Result<f64> {
    same_grid(f, g)?;
    let sum: f64 = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(&a, &b)| a * b)
        .sum();
    Ok(f.grid().cell_area() * sum)
}

/// Parseval form of [`l2_inner`] on raw spectra: `(L^2/M^4) * sum Re(a * conj(b))`.
pub(crate) fn parseval_inner(grid: &GridSpec, a: &[Complex64], b: &[Complex64]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum();
    let m2 = grid.points() as f64;
    grid.length() * grid.length() / (m2 * m2) * sum
}

/// `H^{-1}` seminorm of a zero-mean field:
/// `sqrt((L^2/M^4) * sum_{k!=0} |fhat|^2 / |kappa|^2)`.
pub fn hminus1_norm(f: &Field) -> Result<f64> {
    ensure_zero_mean(f)?;
    let c = forward_transform(f);
    let grid = f.grid();
    let m = grid.m();
    let mut sum = 0.0;
    for iy in 0..m {
        for ix in 0..m {
            if ix == 0 && iy == 0 {
                continue;
            }
            sum += c.coeffs()[iy * m + ix].norm_sqr() / grid.kappa_sq(ix, iy);
        }
    }
    let m2 = grid.points() as f64;
    Ok((grid.length() * grid.length() / (m2 * m2) * sum).sqrt())
}

/// Pointwise triple product `f*g*h`, either direct collocation (default) or
/// on a 3/2 zero-padded grid with truncation back to the original modes.
pub fn triple_product(f: &Field, g: &Field, h: &Field, dealias: bool) -> Result<Field> {
    same_grid(f, g)?;
    same_grid(f, h)?;
    if !dealias {
        let values = f
            .values()
            .iter()
            .zip(g.values())
            .zip(h.values())
            .map(|((&a, &b), &c)| a * b * c)
            .collect();
        return Field::new(f.grid(), values);
    }

    let grid = f.grid();
    let m = grid.m();
    let mp = 3 * m / 2;

    let lift = |field: &Field| -> Vec<Complex64> {
        let c = forward_transform(field);
        let mut out = vec![Complex64::default(); mp * mp];
        for iy in 0..m {
            let l = grid.mode(iy);
            if grid.is_nyquist(iy) {
                continue; // unpaired mode: dropped on embedding
            }
            let fy = l.rem_euclid(mp as i64) as usize;
            for ix in 0..m {
                if grid.is_nyquist(ix) {
                    continue;
                }
                let k = grid.mode(ix);
                let fx = k.rem_euclid(mp as i64) as usize;
                out[fy * mp + fx] = c.coeffs()[iy * m + ix];
            }
        }
        fft2_inplace(mp, &mut out, FftDirection::Inverse);
        // inverse is 1/Mp^2 but the spectrum was built with the M-grid
        // convention, so rescale to physical samples
        let scale = 1.0 / (m * m) as f64;
        out.iter_mut().for_each(|v| *v *= scale);
        out
    };

    let a = lift(f);
    let b = lift(g);
    let c = lift(h);
    let mut prod: Vec<Complex64> = a
        .iter()
        .zip(&b)
        .zip(&c)
        .map(|((x, y), z)| Complex64::new(x.re * y.re * z.re, 0.0))
        .collect();
    fft2_inplace(mp, &mut prod, FftDirection::Forward);

    // truncate back and return to the coarse-grid spectral convention
    let mut coarse = SpectralCoeffs::zeros(grid);
    let ratio = ((m * m) as f64) / ((mp * mp) as f64);
    for iy in 0..m {
        if grid.is_nyquist(iy) {
            continue;
        }
        let fy = grid.mode(iy).rem_euclid(mp as i64) as usize;
        for ix in 0..m {
            if grid.is_nyquist(ix) {
                continue;
            }
            let fx = grid.mode(ix).rem_euclid(mp as i64) as usize;
            coarse.coeffs_mut()[iy * m + ix] = prod[fy * mp + fx] * ratio;
        }
    }
    inverse_transform_unchecked(&coarse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{dft2_direct, idft2_direct, random_field};
    use std::f64::consts::PI;

    #[test]
    fn constant_field_is_the_zero_mode() {
        let grid = GridSpec::new(8, 32.0).unwrap();
        let f = Field::constant(grid, 2.5).unwrap();
        let c = forward_transform(&f);
        for iy in 0..8 {
            for ix in 0..8 {
                let v = c.coeffs()[iy * 8 + ix];
                if ix == 0 && iy == 0 {
                    assert!((v.re - 2.5 * 64.0).abs() < 1e-13 * 64.0);
                    assert!(v.im.abs() < 1e-13);
                } else {
                    assert!(v.norm() < 1e-13 * 64.0, "mode ({ix},{iy}) = {v}");
                }
            }
        }
    }

    #[test]
    fn pure_cosine_hits_two_modes() {
        let grid = GridSpec::new(16, 32.0).unwrap();
        let f = Field::from_fn(grid, |x, _| (2.0 * PI * x / 32.0).cos()).unwrap();
        let c = forward_transform(&f);
        let scale = grid.points() as f64;
        for iy in 0..16 {
            for ix in 0..16 {
                let v = c.coeffs()[iy * 16 + ix].norm();
                let expected = if iy == 0 && (ix == 1 || ix == 15) {
                    scale / 2.0
                } else {
                    0.0
                };
                assert!((v - expected).abs() < 1e-10, "mode ({ix},{iy}) norm {v}");
            }
        }
    }

    #[test]
    fn forward_matches_direct_dft_oracle() {
        let grid = GridSpec::new(8, 5.0).unwrap();
        let f = random_field(grid, 42);
        let ours = forward_transform(&f);
        let oracle = dft2_direct(&f);
        let scale = f.max_abs() * grid.points() as f64;
        for (a, b) in ours.coeffs().iter().zip(&oracle) {
            assert!((a - b).norm() <= 1e-12 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn inverse_of_zero_is_zero() {
        let grid = GridSpec::new(8, 1.0).unwrap();
        let c = SpectralCoeffs::zeros(grid);
        let f = inverse_transform(&c).unwrap();
        assert!(f.max_abs() == 0.0);
    }

    #[test]
    fn round_trip_identity() {
        for (m, seed) in [(8usize, 3u64), (16, 7), (64, 11)] {
            let grid = GridSpec::new(m, 3.0).unwrap();
            let f = random_field(grid, seed);
            let back = inverse_transform(&forward_transform(&f)).unwrap();
            let scale = f.max_abs();
            for (a, b) in f.values().iter().zip(back.values()) {
                assert!((a - b).abs() <= 1e-13 * scale.max(1.0), "M = {m}");
            }
        }
    }

    #[test]
    fn single_mode_pair_is_sampled_exponential() {
        let grid = GridSpec::new(8, 2.0).unwrap();
        let mut c = SpectralCoeffs::zeros(grid);
        // conjugate pair at (1,1) and (-1,-1)
        let m = 8i64;
        let idx = |k: i64, l: i64| (l.rem_euclid(m) * m + k.rem_euclid(m)) as usize;
        c.coeffs_mut()[idx(1, 1)] = Complex64::new(1.0, 0.0);
        c.coeffs_mut()[idx(-1, -1)] = Complex64::new(1.0, 0.0);
        let f = inverse_transform(&c).unwrap();
        for iy in 0..8 {
            for ix in 0..8 {
                let phase = 2.0 * PI * (ix + iy) as f64 / 8.0;
                let expected = 2.0 * phase.cos() / 64.0;
                assert!((f.at(ix, iy) - expected).abs() < 1e-14, "at ({ix},{iy})");
            }
        }
    }

    #[test]
    fn asymmetric_spectrum_is_rejected() {
        let grid = GridSpec::new(8, 1.0).unwrap();
        let mut c = SpectralCoeffs::zeros(grid);
        c.coeffs_mut()[1] = Complex64::new(0.0, 3.0); // lone mode, no conjugate partner
        match inverse_transform(&c) {
            Err(PfcError::AsymmetricSpectrum { .. }) => {}
            other => panic!("expected symmetry error, got {other:?}"),
        }
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let grid = GridSpec::new(8, 32.0).unwrap();
        let f = Field::constant(grid, 4.0).unwrap();
        assert!(apply_laplacian(&f).max_abs() < 1e-13);
    }

    #[test]
    fn laplacian_eigenfunction() {
        let grid = GridSpec::new(32, 32.0).unwrap();
        let f = Field::from_fn(grid, |x, _| (2.0 * PI * x / 32.0).sin()).unwrap();
        let lap = apply_laplacian(&f);
        let lam = -(2.0 * PI / 32.0_f64).powi(2);
        for (a, b) in lap.values().iter().zip(f.values()) {
            assert!((a - lam * b).abs() < 1e-13);
        }
    }

    #[test]
    fn laplacian_matches_oracles() {
        let grid = GridSpec::new(8, 4.0).unwrap();
        let f = random_field(grid, 3);

        // dense-DFT oracle
        let mut spec = dft2_direct(&f);
        for iy in 0..8 {
            for ix in 0..8 {
                spec[iy * 8 + ix] *= -grid.kappa_sq(ix, iy);
            }
        }
        let oracle = idft2_direct(grid, &spec);
        let ours = apply_laplacian(&f);
        let scale = oracle.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in ours.values().iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }

        // second-order finite differences on refinements of a smooth field
        let smooth = |g: GridSpec| {
            Field::from_fn(g, |x, y| {
                (2.0 * PI * x / 4.0).sin() + 0.5 * (2.0 * PI * y / 4.0).cos()
            })
            .unwrap()
        };
        let mut errs = Vec::new();
        for m in [16usize, 32] {
            let g = GridSpec::new(m, 4.0).unwrap();
            let f = smooth(g);
            let lap = apply_laplacian(&f);
            let h = g.spacing();
            let mut worst = 0.0f64;
            for iy in 0..m {
                for ix in 0..m {
                    let fd = (f.at((ix + 1) % m, iy)
                        + f.at((ix + m - 1) % m, iy)
                        + f.at(ix, (iy + 1) % m)
                        + f.at(ix, (iy + m - 1) % m)
                        - 4.0 * f.at(ix, iy))
                        / (h * h);
                    worst = worst.max((fd - lap.at(ix, iy)).abs());
                }
            }
            errs.push(worst);
        }
        // halving h should quarter the FD discrepancy
        let rate = errs[0] / errs[1];
        assert!((3.0..5.0).contains(&rate), "FD convergence rate {rate}");
    }

    #[test]
    fn shifted_biharmonic_on_constant_and_kernel_mode() {
        let grid = GridSpec::new(16, 32.0).unwrap();
        let beta = 0.7;
        let c = Field::constant(grid, 3.0).unwrap();
        let out = apply_shifted_biharmonic(&c, beta);
        for v in out.values() {
            assert!((v - beta * beta * 3.0).abs() < 1e-12);
        }

        // with beta = (2*pi/L)^2 the symbol vanishes on the first mode
        let beta_k = (2.0 * PI / 32.0_f64).powi(2);
        let f = Field::from_fn(grid, |x, _| (2.0 * PI * x / 32.0).sin()).unwrap();
        assert!(apply_shifted_biharmonic(&f, beta_k).max_abs() < 1e-13);
    }

    #[test]
    fn shifted_biharmonic_operator_identity() {
        let grid = GridSpec::new(8, 4.0).unwrap();
        let beta = 1.3;
        let f = random_field(grid, 11);
        let ours = apply_shifted_biharmonic(&f, beta);
        let lap = apply_laplacian(&f);
        let laplap = apply_laplacian(&lap);
        let scale = ours.max_abs().max(1.0);
        for i in 0..grid.points() {
            let composed =
                laplap.values()[i] + 2.0 * beta * lap.values()[i] + beta * beta * f.values()[i];
            assert!((ours.values()[i] - composed).abs() <= 1e-11 * scale);
        }
    }

    #[test]
    fn inverse_laplacian_round_trip_and_eigenfunction() {
        let grid = GridSpec::new(16, 32.0).unwrap();
        let zero = Field::zeros(grid);
        assert!(apply_inverse_laplacian(&zero).unwrap().max_abs() == 0.0);

        let f = Field::from_fn(grid, |x, _| (2.0 * PI * x / 32.0).sin()).unwrap();
        let psi = apply_inverse_laplacian(&f).unwrap();
        let factor = (32.0 / (2.0 * PI)).powi(2);
        for (a, b) in psi.values().iter().zip(f.values()) {
            assert!((a - factor * b).abs() < 1e-11);
        }

        // random zero-mean field: laplacian(inverse) = -f
        let raw = random_field(grid, 5);
        let mean = raw.mean();
        let zm = raw.map(|v| v - mean).unwrap();
        let back = apply_laplacian(&apply_inverse_laplacian(&zm).unwrap());
        let scale = zm.max_abs();
        for (a, b) in back.values().iter().zip(zm.values()) {
            assert!((a + b).abs() <= 1e-11 * scale);
        }
    }

    #[test]
    fn inverse_laplacian_rejects_mass() {
        let grid = GridSpec::new(8, 1.0).unwrap();
        let f = Field::constant(grid, 1.0).unwrap();
        match apply_inverse_laplacian(&f) {
            Err(PfcError::NonZeroMean { .. }) => {}
            other => panic!("expected mass error, got {other:?}"),
        }
    }

    #[test]
    fn l2_norm_of_unit_constant() {
        let grid = GridSpec::new(64, 32.0).unwrap();
        let f = Field::constant(grid, 1.0).unwrap();
        assert!((l2_norm(&f) - 32.0).abs() < 1e-12);
    }

    #[test]
    fn sin_cos_orthogonality() {
        let grid = GridSpec::new(32, 32.0).unwrap();
        let s = Field::from_fn(grid, |x, _| (2.0 * PI * x / 32.0).sin()).unwrap();
        let c = Field::from_fn(grid, |x, _| (2.0 * PI * x / 32.0).cos()).unwrap();
        assert!(l2_inner(&s, &c).unwrap().abs() < 1e-12);
    }

    #[test]
    fn parseval_matches_quadrature() {
        let grid = GridSpec::new(16, 7.0).unwrap();
        let f = random_field(grid, 9);
        let c = forward_transform(&f);
        let direct = l2_norm(&f).powi(2);
        let spectral = parseval_inner(&grid, c.coeffs(), c.coeffs());
        assert!((direct - spectral).abs() <= 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn hminus1_single_mode_scaling() {
        let grid = GridSpec::new(32, 32.0).unwrap();
        let zero = Field::zeros(grid);
        assert_eq!(hminus1_norm(&zero).unwrap(), 0.0);

        let f = Field::from_fn(grid, |x, _| (2.0 * PI * x / 32.0).sin()).unwrap();
        let expected = 32.0 / (2.0 * PI) * l2_norm(&f);
        assert!((hminus1_norm(&f).unwrap() - expected).abs() < 1e-11);

        let mass = Field::constant(grid, 0.5).unwrap();
        assert!(matches!(
            hminus1_norm(&mass),
            Err(PfcError::NonZeroMean { .. })
        ));
    }

    #[test]
    fn hminus1_matches_inverse_laplacian_inner() {
        let grid = GridSpec::new(16, 5.0).unwrap();
        let raw = random_field(grid, 21);
        let mean = raw.mean();
        let f = raw.map(|v| v - mean).unwrap();
        let via_inner = l2_inner(&f, &apply_inverse_laplacian(&f).unwrap())
            .unwrap()
            .sqrt();
        let direct = hminus1_norm(&f).unwrap();
        assert!((via_inner - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn triple_product_constants_and_zero() {
        let grid = GridSpec::new(8, 1.0).unwrap();
        let c = Field::constant(grid, 1.5).unwrap();
        for dealias in [false, true] {
            let p = triple_product(&c, &c, &c, dealias).unwrap();
            for v in p.values() {
                assert!((v - 1.5_f64.powi(3)).abs() < 1e-12);
            }
        }
        let z = Field::zeros(grid);
        assert!(triple_product(&z, &z, &z, true).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn padded_cosine_cube_matches_triple_angle_expansion() {
        let grid = GridSpec::new(16, 32.0).unwrap();
        let f = Field::from_fn(grid, |x, _| (2.0 * PI * x / 32.0).cos()).unwrap();
        // cos^3 t = (3 cos t + cos 3t)/4
        let exact = Field::from_fn(grid, |x, _| {
            let t = 2.0 * PI * x / 32.0;
            (3.0 * t.cos() + (3.0 * t).cos()) / 4.0
        })
        .unwrap();
        let padded = triple_product(&f, &f, &f, true).unwrap();
        for (a, b) in padded.values().iter().zip(exact.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn operators_are_linear() {
        let grid = GridSpec::new(8, 3.0).unwrap();
        let f = random_field(grid, 1);
        let g = random_field(grid, 2);
        let (alpha, beta) = (0.7, -1.9);
        let combo = f.axpy(alpha, &g, beta).unwrap();
        let lhs = apply_laplacian(&combo);
        let rhs = apply_laplacian(&f)
            .axpy(alpha, &apply_laplacian(&g), beta)
            .unwrap();
        let scale = lhs.max_abs().max(1.0);
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn mean_scaling_under_operators() {
        let grid = GridSpec::new(8, 2.0).unwrap();
        let f = random_field(grid, 13);
        let beta = 0.9;
        assert!(apply_laplacian(&f).mean().abs() <= 1e-13 * f.max_abs());
        let bh = apply_shifted_biharmonic(&f, beta);
        assert!((bh.mean() - beta * beta * f.mean()).abs() <= 1e-12 * f.max_abs());
    }
}
