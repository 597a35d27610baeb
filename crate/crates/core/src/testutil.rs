//! Brute-force reference implementations used by the test suites: direct
//! `O(M^4)` DFT summation, dense operator assembly, an LU solver, and a dense
//! solve of the coupled `(phi, r)` step. Nothing here touches the FFT path or
//! the spectral solve it cross-checks.

#![doc(hidden)]

use rustfft::num_complex::Complex64;

use crate::field::Field;
use crate::grid::GridSpec;
use crate::model::ModelParams;
use crate::rng::SplitMix64;

/// Deterministic field with samples in `[-1, 1)`.
pub fn random_field(grid: GridSpec, seed: u64) -> Field {
    let mut rng = SplitMix64::new(seed);
    let values = (0..grid.points()).map(|_| rng.next_symmetric()).collect();
    Field::new(grid, values).expect("finite samples")
}

/// Direct unscaled forward DFT by summation.
pub fn dft2_direct(f: &Field) -> Vec<Complex64> {
    let grid = f.grid();
    let m = grid.m();
    let mut out = vec![Complex64::default(); grid.points()];
    for il in 0..m {
        for ik in 0..m {
            let mut acc = Complex64::default();
            for iy in 0..m {
                for ix in 0..m {
                    let phase =
                        -2.0 * std::f64::consts::PI * ((ik * ix + il * iy) % m) as f64 / m as f64;
                    acc += f.at(ix, iy) * Complex64::new(phase.cos(), phase.sin());
                }
            }
            out[il * m + ik] = acc;
        }
    }
    out
}

/// Direct inverse DFT by summation (real part, scaled by `1/M^2`).
pub fn idft2_direct(grid: GridSpec, spec: &[Complex64]) -> Vec<f64> {
    let m = grid.m();
    let mut out = vec![0.0; grid.points()];
    for iy in 0..m {
        for ix in 0..m {
            let mut acc = Complex64::default();
            for il in 0..m {
                for ik in 0..m {
                    let phase =
                        2.0 * std::f64::consts::PI * ((ik * ix + il * iy) % m) as f64 / m as f64;
                    acc += spec[il * m + ik] * Complex64::new(phase.cos(), phase.sin());
                }
            }
            out[iy * m + ix] = acc.re / (m * m) as f64;
        }
    }
    out
}

fn zero_nyquist_direct(grid: GridSpec, spec: &mut [Complex64]) {
    let m = grid.m();
    let ny = m / 2;
    for i in 0..m {
        spec[ny * m + i] = Complex64::default();
        spec[i * m + ny] = Complex64::default();
    }
}

/// Dense real matrix of a spectral multiplier, column by column through the
/// direct DFT.
pub fn dense_symbol_matrix(grid: GridSpec, symbol: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let n = grid.points();
    let m = grid.m();
    let mut mat = vec![0.0; n * n];
    for col in 0..n {
        let mut unit = vec![0.0; n];
        unit[col] = 1.0;
        let f = Field::new(grid, unit).unwrap();
        let mut spec = dft2_direct(&f);
        for iy in 0..m {
            for ix in 0..m {
                spec[iy * m + ix] *= symbol(ix, iy);
            }
        }
        let vals = idft2_direct(grid, &spec);
        for row in 0..n {
            mat[row * n + col] = vals[row];
        }
    }
    mat
}

/// Partial-pivot Gaussian elimination, `a` row-major `n x n`.
pub fn lu_solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    assert_eq!(a.len(), n * n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        assert!(diag.abs() > 0.0, "singular dense system");
        for row in (col + 1)..n {
            let factor = a[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    x
}

/// Dense reference solve of one SAV step: assembles the full
/// `(M^2+1) x (M^2+1)` linear system in the unknowns `(phi_next, r_next)` and
/// solves it by LU. `phi_prev = None` selects the first-order starter form
/// (coefficients `a=b=1, c=0`, nonlinearity frozen at `phi_curr`).
pub fn dense_sav_step(
    p: &ModelParams,
    phi_curr: &Field,
    phi_prev: Option<&Field>,
    r_curr: f64,
    tau_prev: Option<f64>,
    tau_next: f64,
    sigma: f64,
) -> (Vec<f64>, f64) {
    let grid = phi_curr.grid();
    let n = grid.points();
    let h2 = grid.cell_area();
    let s_plus_eps = p.s + p.epsilon;

    let (a, b, c, sigma_implicit, phi_star): (f64, f64, f64, f64, Vec<f64>) = match phi_prev {
        None => (1.0, 1.0, 0.0, 1.0, phi_curr.values().to_vec()),
        Some(prev) => {
            let gamma = tau_next / tau_prev.expect("bdf2 step needs tau_prev");
            let a = (1.0 + 2.0 * sigma * gamma) / (1.0 + gamma);
            let b = 1.0 + (2.0 * sigma - 1.0) * gamma;
            let c = (2.0 * sigma - 1.0) * gamma * gamma / (1.0 + gamma);
            let star = phi_curr
                .values()
                .iter()
                .zip(prev.values())
                .map(|(&cur, &prv)| cur + sigma * gamma * (cur - prv))
                .collect();
            (a, b, c, sigma, star)
        }
    };

    // E1(phi_curr) and the frozen nonlinear vector, Nyquist-filtered
    let e1: f64 = phi_curr
        .values()
        .iter()
        .map(|&v| 0.25 * v.powi(4) - 0.5 * s_plus_eps * v * v)
        .sum::<f64>()
        * h2;
    let sqrt_e1c0 = (e1 + p.c0).sqrt();
    let raw_b: Vec<f64> = phi_star
        .iter()
        .map(|&v| (v.powi(3) - s_plus_eps * v) / sqrt_e1c0)
        .collect();
    let mut spec = dft2_direct(&Field::new(grid, raw_b).unwrap());
    zero_nyquist_direct(grid, &mut spec);
    let b_vec = idft2_direct(grid, &spec);

    let lap = dense_symbol_matrix(grid, |ix, iy| -grid.kappa_sq(ix, iy));
    let lap_l = dense_symbol_matrix(grid, |ix, iy| {
        let k2 = grid.kappa_sq(ix, iy);
        let shifted = p.beta - k2;
        -k2 * (shifted * shifted + p.s)
    });

    let matvec = |mat: &[f64], v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|row| (0..n).map(|col| mat[row * n + col] * v[col]).sum())
            .collect()
    };

    let lap_b = matvec(&lap, &b_vec);
    let lap_l_curr = matvec(&lap_l, phi_curr.values());

    // assemble [(a/tau) I - sigma_impl * LapL, -Lap b; -h^2 b/2, 1]
    let dim = n + 1;
    let mut mat = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    for row in 0..n {
        for col in 0..n {
            mat[row * dim + col] = -sigma_implicit * lap_l[row * n + col];
        }
        mat[row * dim + row] += a / tau_next;
        mat[row * dim + n] = -lap_b[row];
        rhs[row] = b / tau_next * phi_curr.values()[row] + (1.0 - sigma_implicit) * lap_l_curr[row];
        if let Some(prev) = phi_prev {
            rhs[row] -= c / tau_next * prev.values()[row];
        }
    }
    let mut b_dot_curr = 0.0;
    for col in 0..n {
        mat[n * dim + col] = -0.5 * h2 * b_vec[col];
        b_dot_curr += b_vec[col] * phi_curr.values()[col];
    }
    mat[n * dim + n] = 1.0;
    rhs[n] = r_curr - 0.5 * h2 * b_dot_curr;

    let sol = lu_solve(mat, rhs);
    (sol[..n].to_vec(), sol[n])
}
