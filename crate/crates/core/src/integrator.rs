//! Time steppers: the first-order SAV starter and the variable-step
//! BDF2-SAV scheme.
//!
//! One BDF2 step solves
//!
//! ```text
//! F2 phi = lap(mu),    mu = (lap+beta)^2 phi^{n+sigma} + S phi^{n+sigma}
//!                           + (r^{n+1}/sqrt(E1^n + C0)) F'(phi_star),
//! (r^{n+1}-r^n)/tau = <F'(phi_star), (phi^{n+1}-phi^n)/tau> / (2 sqrt(E1^n+C0)),
//! ```
//!
//! where `F2` is the step-ratio-weighted two-step stencil, `phi^{n+sigma} =
//! sigma*phi^{n+1} + (1-sigma)*phi^n` and the nonlinearity is frozen at the
//! extrapolant `phi_star = phi^n + sigma*gamma*(phi^n - phi^{n-1})`. Because
//! the coupling is linear, the step decouples into two constant-coefficient
//! solves (diagonal in spectral space, symbol `a/tau + sigma*|kappa|^2*
//! ((beta-|kappa|^2)^2 + S)`) plus one explicit scalar update:
//! `A phi_1 = g`, `A phi_2 = lap(b)`, then `r^{n+1}` from the scalar equation
//! and `phi^{n+1} = phi_1 + r^{n+1} phi_2`.

use rustfft::num_complex::Complex64;

use crate::error::{PfcError, Result};
use crate::field::{same_grid, Field, SpectralCoeffs};
use crate::grid::GridSpec;
use crate::model::{double_well_deriv, e1, sav_r, ModelParams};
use crate::spectral::{
    forward_transform, inverse_transform_unchecked, parseval_inner, triple_product,
};

/// Stencil weights of the second-order difference operator
/// `F2 phi = (a phi^{n+1} - b phi^n + c phi^{n-1}) / tau_{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdfCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub sigma: f64,
    pub gamma: f64,
}

/// Weights for offset `sigma` in `[1/2, 1]` and step ratio `gamma > 0`.
/// `sigma = 1` is the classical variable-step BDF2, `sigma = 1/2` collapses to
/// the Crank-Nicolson difference `(phi^{n+1}-phi^n)/tau`.
pub fn bdf2_coefficients(sigma: f64, gamma: f64) -> Result<BdfCoefficients> {
    if !(0.5..=1.0).contains(&sigma) {
        return Err(PfcError::InvalidParameter(format!(
            "sigma must lie in [1/2, 1], got {sigma}"
        )));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(PfcError::InvalidParameter(format!(
            "step ratio gamma must be positive, got {gamma}"
        )));
    }
    let a = (1.0 + 2.0 * sigma * gamma) / (1.0 + gamma);
    let b = 1.0 + (2.0 * sigma - 1.0) * gamma;
    let c = (2.0 * sigma - 1.0) * gamma * gamma / (1.0 + gamma);
    Ok(BdfCoefficients {
        a,
        b,
        c,
        sigma,
        gamma,
    })
}

/// Second-order prediction `phi^n + sigma*gamma*(phi^n - phi^{n-1})` at which
/// the nonlinearity is frozen.
pub fn extrapolant(phi_curr: &Field, phi_prev: &Field, sigma: f64, gamma: f64) -> Result<Field> {
    same_grid(phi_curr, phi_prev)?;
    let w = sigma * gamma;
    phi_curr.axpy(1.0 + w, phi_prev, -w)
}

/// Everything the two-step recursion needs to advance.
#[derive(Debug, Clone)]
pub struct StepState {
    pub phi_prev: Field,
    pub phi_curr: Field,
    pub r_curr: f64,
    pub tau_prev: f64,
    pub t_curr: f64,
    pub step_index: u64,
}

/// Per-step scalars worth monitoring.
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics {
    /// `1 - <b, phi_2>/2`; provably `>= 1`, fatal if it ever drops to <= 0.
    pub denominator: f64,
    /// `r^{n+1} / sqrt(E1^n + C0)`, the quantity tracking 1.
    pub r_ratio: f64,
    /// Realized step ratio `tau_{n+1}/tau_n` (0 for the starter).
    pub gamma: f64,
}

struct AdvanceOutput {
    phi_hat_next: Vec<Complex64>,
    r_next: f64,
    diagnostics: StepDiagnostics,
}

/// Shared linear-solve core. The starter is the same algebra with
/// `(a, b, c) = (1, 1, 0)`, fully implicit weight, and the nonlinearity frozen
/// at `phi^n` instead of the extrapolant.
#[allow(clippy::too_many_arguments)]
fn sav_advance(
    grid: GridSpec,
    phi_hat_curr: &[Complex64],
    phi_hat_prev: Option<&[Complex64]>,
    phi_star: &Field,
    e1_curr: f64,
    r_curr: f64,
    tau_next: f64,
    coeff: BdfCoefficients,
    sigma_implicit: f64,
    p: &ModelParams,
    dealias: bool,
) -> Result<AdvanceOutput> {
    if !(tau_next > 0.0 && tau_next.is_finite()) {
        return Err(PfcError::InvalidParameter(format!(
            "step size must be positive, got {tau_next}"
        )));
    }
    let radicand = e1_curr + p.c0;
    if radicand <= 0.0 {
        return Err(PfcError::C0TooSmall { radicand });
    }
    let sqrt_e1c0 = radicand.sqrt();

    // frozen nonlinearity, Nyquist-filtered
    let cubic = triple_product(phi_star, phi_star, phi_star, dealias)?;
    let fprime = cubic.axpy(1.0, phi_star, -p.s_plus_eps())?;
    let mut b_hat = forward_transform(&fprime);
    b_hat.zero_nyquist();
    let inv_sqrt = 1.0 / sqrt_e1c0;
    for v in b_hat.coeffs_mut() {
        *v *= inv_sqrt;
    }

    let m = grid.m();
    let n = grid.points();
    let (a, b, c) = (coeff.a, coeff.b, coeff.c);
    let mut phi1 = vec![Complex64::default(); n];
    let mut phi2 = vec![Complex64::default(); n];
    for iy in 0..m {
        for ix in 0..m {
            let idx = iy * m + ix;
            let k2 = grid.kappa_sq(ix, iy);
            let shifted = p.beta - k2;
            let lsym = shifted * shifted + p.s;
            let asym = a / tau_next + sigma_implicit * k2 * lsym;
            let prev = phi_hat_prev.map_or(Complex64::default(), |ph| ph[idx]);
            if idx == 0 {
                // k = 0: A reduces to a/tau and the right side to the stencil
                // identity; this form conserves the mean exactly when the two
                // history means agree bit-for-bit.
                phi1[idx] = phi_hat_curr[idx] + (c / a) * (phi_hat_curr[idx] - prev);
                phi2[idx] = Complex64::default();
            } else {
                let g = (b / tau_next) * phi_hat_curr[idx]
                    - (c / tau_next) * prev
                    - (1.0 - sigma_implicit) * k2 * lsym * phi_hat_curr[idx];
                phi1[idx] = g / asym;
                phi2[idx] = -k2 * b_hat.coeffs()[idx] / asym;
            }
        }
    }

    let diff: Vec<Complex64> = phi1.iter().zip(phi_hat_curr).map(|(x, y)| x - y).collect();
    let ip_b_diff = parseval_inner(&grid, b_hat.coeffs(), &diff);
    let ip_b_phi2 = parseval_inner(&grid, b_hat.coeffs(), &phi2);
    let denominator = 1.0 - 0.5 * ip_b_phi2;
    if denominator <= 0.0 {
        return Err(PfcError::ScalarSolveDenominator { value: denominator });
    }
    let r_next = (r_curr + 0.5 * ip_b_diff) / denominator;
    if !r_next.is_finite() {
        return Err(PfcError::NonFinite {
            context: "auxiliary variable update",
        });
    }

    let phi_hat_next: Vec<Complex64> = phi1
        .iter()
        .zip(&phi2)
        .map(|(x, y)| x + r_next * y)
        .collect();

    Ok(AdvanceOutput {
        phi_hat_next,
        r_next,
        diagnostics: StepDiagnostics {
            denominator,
            r_ratio: r_next / sqrt_e1c0,
            gamma: if phi_hat_prev.is_some() {
                coeff.gamma
            } else {
                0.0
            },
        },
    })
}

/// One step of the first-order SAV starter. `r0` must equal `sav_r(phi0)`.
pub fn first_order_step(phi0: &Field, r0: f64, tau1: f64, p: &ModelParams) -> Result<(Field, f64)> {
    let coeff = BdfCoefficients {
        a: 1.0,
        b: 1.0,
        c: 0.0,
        sigma: 1.0,
        gamma: 1.0,
    };
    let phi_hat = forward_transform(phi0);
    let out = sav_advance(
        phi0.grid(),
        phi_hat.coeffs(),
        None,
        phi0,
        e1(phi0, p),
        r0,
        tau1,
        coeff,
        1.0,
        p,
        false,
    )?;
    let spec = SpectralCoeffs::new(phi0.grid(), out.phi_hat_next)?;
    Ok((inverse_transform_unchecked(&spec)?, out.r_next))
}

/// One variable-step BDF2-SAV step; returns the advanced state and the step
/// diagnostics.
pub fn bdf2_step(
    state: &StepState,
    tau_next: f64,
    sigma: f64,
    p: &ModelParams,
) -> Result<(StepState, StepDiagnostics)> {
    if !(state.tau_prev > 0.0) {
        return Err(PfcError::InvalidParameter(
            "bdf2_step needs a completed previous step (tau_prev > 0)".into(),
        ));
    }
    let gamma = tau_next / state.tau_prev;
    let coeff = bdf2_coefficients(sigma, gamma)?;
    let star = extrapolant(&state.phi_curr, &state.phi_prev, sigma, gamma)?;
    let hat_curr = forward_transform(&state.phi_curr);
    let hat_prev = forward_transform(&state.phi_prev);
    let out = sav_advance(
        state.phi_curr.grid(),
        hat_curr.coeffs(),
        Some(hat_prev.coeffs()),
        &star,
        e1(&state.phi_curr, p),
        state.r_curr,
        tau_next,
        coeff,
        sigma,
        p,
        false,
    )?;
    let spec = SpectralCoeffs::new(state.phi_curr.grid(), out.phi_hat_next)?;
    let phi_next = inverse_transform_unchecked(&spec)?;
    let next = StepState {
        phi_prev: state.phi_curr.clone(),
        phi_curr: phi_next,
        r_curr: out.r_next,
        tau_prev: tau_next,
        t_curr: state.t_curr + tau_next,
        step_index: state.step_index + 1,
    };
    Ok((next, out.diagnostics))
}

/// Reconstructs the chemical potential `mu^{n+sigma}` of a committed step,
/// given the states before and after it.
pub fn chemical_potential(
    before: &StepState,
    after: &StepState,
    sigma: f64,
    p: &ModelParams,
) -> Result<Field> {
    same_grid(&before.phi_curr, &after.phi_curr)?;
    let gamma = if before.tau_prev > 0.0 {
        after.tau_prev / before.tau_prev
    } else {
        1.0
    };
    let star = extrapolant(&before.phi_curr, &before.phi_prev, sigma, gamma)?;
    let radicand = e1(&before.phi_curr, p) + p.c0;
    if radicand <= 0.0 {
        return Err(PfcError::C0TooSmall { radicand });
    }
    let ratio = after.r_curr / radicand.sqrt();

    let fprime = star.map(|v| double_well_deriv(v, p.s, p.epsilon))?;
    let mut w_hat = forward_transform(&fprime);
    w_hat.zero_nyquist();
    let w = inverse_transform_unchecked(&w_hat)?;

    let phi_mid = after.phi_curr.axpy(sigma, &before.phi_curr, 1.0 - sigma)?;
    let quad = crate::spectral::apply_shifted_biharmonic(&phi_mid, p.beta);
    let mut mu = quad.axpy(1.0, &phi_mid, p.s)?;
    mu = mu.axpy(1.0, &w, ratio)?;
    Ok(mu)
}

/// Run-loop engine: owns the spectral history so marching costs three
/// transforms per step. Not shareable across concurrent callers.
pub struct Stepper {
    p: ModelParams,
    sigma: f64,
    dealias: bool,
    grid: GridSpec,
    phi_hat_prev: Vec<Complex64>,
    phi_hat_curr: Vec<Complex64>,
    phi_prev: Field,
    phi_curr: Field,
    e1_curr: f64,
    r_curr: f64,
    tau_prev: f64,
    t_curr: f64,
    step_index: u64,
    last: StepDiagnostics,
    r_sign_warnings: u64,
    c0_bound_warnings: u64,
}

impl Stepper {
    /// `r^0` is initialized to `sav_r(phi0)`.
    pub fn new(phi0: Field, p: ModelParams, sigma: f64, dealias: bool) -> Result<Self> {
        if !(0.5..=1.0).contains(&sigma) {
            return Err(PfcError::InvalidParameter(format!(
                "sigma must lie in [1/2, 1], got {sigma}"
            )));
        }
        let r0 = sav_r(&phi0, &p)?;
        let hat = forward_transform(&phi0);
        Ok(Self {
            p,
            sigma,
            dealias,
            grid: phi0.grid(),
            phi_hat_prev: hat.coeffs().to_vec(),
            phi_hat_curr: hat.coeffs().to_vec(),
            phi_prev: phi0.clone(),
            e1_curr: e1(&phi0, &p),
            phi_curr: phi0,
            r_curr: r0,
            tau_prev: 0.0,
            t_curr: 0.0,
            step_index: 0,
            last: StepDiagnostics {
                denominator: 1.0,
                r_ratio: 1.0,
                gamma: 0.0,
            },
            r_sign_warnings: 0,
            c0_bound_warnings: 0,
        })
    }

    /// Advances one step: the first call runs the first-order starter, every
    /// later call the BDF2 scheme.
    pub fn advance(&mut self, tau_next: f64) -> Result<&StepDiagnostics> {
        let out = if self.step_index == 0 {
            let coeff = BdfCoefficients {
                a: 1.0,
                b: 1.0,
                c: 0.0,
                sigma: 1.0,
                gamma: 1.0,
            };
            sav_advance(
                self.grid,
                &self.phi_hat_curr,
                None,
                &self.phi_curr.clone(),
                self.e1_curr,
                self.r_curr,
                tau_next,
                coeff,
                1.0,
                &self.p,
                self.dealias,
            )?
        } else {
            let gamma = tau_next / self.tau_prev;
            let coeff = bdf2_coefficients(self.sigma, gamma)?;
            let star = spectral_extrapolant(
                self.grid,
                &self.phi_hat_curr,
                &self.phi_hat_prev,
                self.sigma,
                gamma,
            )?;
            sav_advance(
                self.grid,
                &self.phi_hat_curr,
                Some(&self.phi_hat_prev),
                &star,
                self.e1_curr,
                self.r_curr,
                tau_next,
                coeff,
                self.sigma,
                &self.p,
                self.dealias,
            )?
        };

        let spec = SpectralCoeffs::new(self.grid, out.phi_hat_next)?;
        let phi_next = inverse_transform_unchecked(&spec)?;

        if out.r_next <= 0.0 {
            self.r_sign_warnings += 1;
            eprintln!(
                "warning: auxiliary variable r = {:.6e} lost positivity at step {}",
                out.r_next,
                self.step_index + 1
            );
        }
        let e1_next = e1(&phi_next, &self.p);
        if e1_next + self.p.c0 < 0.5 * self.p.c0 {
            self.c0_bound_warnings += 1;
            // the admissibility window is only enforced at t = 0; later drift
            // is reported, not fatal
            if self.c0_bound_warnings <= 3 {
                eprintln!(
                    "warning: E1 + C0 = {:.6e} dropped below C0/2 = {:.6e} at step {}",
                    e1_next + self.p.c0,
                    0.5 * self.p.c0,
                    self.step_index + 1
                );
            }
        }

        self.phi_hat_prev = std::mem::replace(&mut self.phi_hat_curr, spec.coeffs().to_vec());
        self.phi_prev = std::mem::replace(&mut self.phi_curr, phi_next);
        self.e1_curr = e1_next;
        self.r_curr = out.r_next;
        self.tau_prev = tau_next;
        self.t_curr += tau_next;
        self.step_index += 1;
        self.last = out.diagnostics;
        Ok(&self.last)
    }

    pub fn phi(&self) -> &Field {
        &self.phi_curr
    }

    pub fn phi_prev(&self) -> &Field {
        &self.phi_prev
    }

    pub fn r(&self) -> f64 {
        self.r_curr
    }

    pub fn t(&self) -> f64 {
        self.t_curr
    }

    pub fn tau_prev(&self) -> f64 {
        self.tau_prev
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn e1_curr(&self) -> f64 {
        self.e1_curr
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn params(&self) -> &ModelParams {
        &self.p
    }

    pub fn last_diagnostics(&self) -> &StepDiagnostics {
        &self.last
    }

    pub fn r_sign_warnings(&self) -> u64 {
        self.r_sign_warnings
    }

    /// Steps on which `E1 + C0` fell below `C0/2` (the admissibility window
    /// holds at t = 0 by construction; later drift is only reported).
    pub fn c0_bound_warnings(&self) -> u64 {
        self.c0_bound_warnings
    }

    /// Value-semantic snapshot of the current two-step window.
    pub fn state(&self) -> StepState {
        StepState {
            phi_prev: self.phi_prev.clone(),
            phi_curr: self.phi_curr.clone(),
            r_curr: self.r_curr,
            tau_prev: self.tau_prev,
            t_curr: self.t_curr,
            step_index: self.step_index,
        }
    }

    /// Energies of the current state, computed from the cached spectrum (no
    /// extra transforms).
    pub fn energy_report(&self) -> EnergyReport {
        let grid = self.grid;
        let m = grid.m();
        let m2 = grid.points() as f64;
        let parseval = grid.length() * grid.length() / (m2 * m2);

        let mut quad = 0.0;
        let mut hm1 = 0.0;
        for iy in 0..m {
            for ix in 0..m {
                let idx = iy * m + ix;
                let k2 = grid.kappa_sq(ix, iy);
                let shifted = self.p.beta - k2;
                quad += shifted * shifted * self.phi_hat_curr[idx].norm_sqr();
                if idx != 0 && self.step_index > 0 {
                    hm1 += (self.phi_hat_curr[idx] - self.phi_hat_prev[idx]).norm_sqr() / k2;
                }
            }
        }
        quad *= parseval;
        hm1 *= parseval;

        let h2 = grid.cell_area();
        let mut quartic = 0.0;
        let mut square = 0.0;
        for &v in self.phi_curr.values() {
            quartic += v.powi(4);
            square += v * v;
        }
        quartic *= h2;
        square *= h2;

        EnergyReport {
            e_original: 0.5 * quad + 0.25 * quartic - 0.5 * self.p.epsilon * square,
            e_modified: 0.5 * quad + 0.5 * self.p.s * square + self.r_curr * self.r_curr,
            hminus1_increment_sq: hm1,
        }
    }
}

/// Energies of one stepper state; `hminus1_increment_sq` is
/// `||grad^{-1}(phi^n - phi^{n-1})||^2` (zero before the first step).
#[derive(Debug, Clone, Copy)]
pub struct EnergyReport {
    pub e_original: f64,
    pub e_modified: f64,
    pub hminus1_increment_sq: f64,
}

/// Extrapolant computed in spectral space (linear, so it commutes with the
/// transform); returns the physical field for the pointwise nonlinearity.
fn spectral_extrapolant(
    grid: GridSpec,
    hat_curr: &[Complex64],
    hat_prev: &[Complex64],
    sigma: f64,
    gamma: f64,
) -> Result<Field> {
    let w = sigma * gamma;
    let combo: Vec<Complex64> = hat_curr
        .iter()
        .zip(hat_prev)
        .map(|(c, p)| (1.0 + w) * c - w * p)
        .collect();
    inverse_transform_unchecked(&SpectralCoeffs::new(grid, combo)?)
}
