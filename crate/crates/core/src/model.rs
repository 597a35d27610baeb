//! Free energies of the phase field crystal model, the double-well
//! nonlinearity, and the scalar auxiliary variable `r = sqrt(E1 + C0)`.
//!
//! The original free energy is
//! `E(phi) = integral( phi*(lap+beta)^2 phi / 2 + phi^4/4 - eps*phi^2/2 )`,
//! split for the SAV reformulation into the quadratic part and
//! `E1(phi) = integral F(phi)` with `F(phi) = phi^4/4 - (S+eps)*phi^2/2`.
//! The stabilization `S >= 0` defaults to `eps`.

use crate::error::{PfcError, Result};
use crate::field::Field;
use crate::spectral::{forward_transform, l2_norm};

/// How the constant `C0` under the SAV square root is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum C0Policy {
    Fixed(f64),
    /// `C0 = max(1/tau_ref, 2|E1(phi0)|)`: at least the reciprocal of the
    /// largest planned step, and large enough that
    /// `C0/2 <= E1(phi0) + C0 <= 2*C0` holds at the initial condition.
    InverseTau,
}

/// Resolved model constants consumed by the steppers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub beta: f64,
    pub epsilon: f64,
    pub s: f64,
    pub c0: f64,
}

impl ModelParams {
    /// Validates `0 < eps < beta^2`, `S >= 0`, `C0 > 0`.
    pub fn new(beta: f64, epsilon: f64, s: f64, c0: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(PfcError::InvalidParameter(format!(
                "beta must be positive, got {beta}"
            )));
        }
        if !(epsilon > 0.0 && epsilon < beta * beta) {
            return Err(PfcError::InvalidParameter(format!(
                "epsilon must satisfy 0 < eps < beta^2 = {}, got {epsilon}",
                beta * beta
            )));
        }
        if !(s >= 0.0 && s.is_finite()) {
            return Err(PfcError::InvalidParameter(format!(
                "S must be nonnegative, got {s}"
            )));
        }
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(PfcError::InvalidParameter(format!(
                "C0 must be positive, got {c0}"
            )));
        }
        Ok(Self {
            beta,
            epsilon,
            s,
            c0,
        })
    }

    /// Standard defaults `beta = 1`, `S = eps`.
    pub fn with_defaults(epsilon: f64, c0: f64) -> Result<Self> {
        Self::new(1.0, epsilon, epsilon, c0)
    }

    pub fn s_plus_eps(&self) -> f64 {
        self.s + self.epsilon
    }
}

/// `F(phi) = phi^4/4 - (S+eps)/2 * phi^2`.
pub fn double_well(phi: f64, s: f64, epsilon: f64) -> f64 {
    0.25 * phi.powi(4) - 0.5 * (s + epsilon) * phi * phi
}

/// `F'(phi) = phi^3 - (S+eps)*phi`.
pub fn double_well_deriv(phi: f64, s: f64, epsilon: f64) -> f64 {
    phi.powi(3) - (s + epsilon) * phi
}

/// `E1(phi) = h^2 * sum F(phi)`.
pub fn e1(phi: &Field, p: &ModelParams) -> f64 {
    let sum: f64 = phi
        .values()
        .iter()
        .map(|&v| double_well(v, p.s, p.epsilon))
        .sum();
    phi.grid().cell_area() * sum
}

/// Quadratic part `||(lap+beta)phi||^2`, evaluated spectrally.
fn shifted_gradient_sq(phi: &Field, beta: f64) -> f64 {
    let c = forward_transform(phi);
    let grid = phi.grid();
    let m = grid.m();
    let mut sum = 0.0;
    for iy in 0..m {
        for ix in 0..m {
            let sym = beta - grid.kappa_sq(ix, iy);
            sum += sym * sym * c.coeffs()[iy * m + ix].norm_sqr();
        }
    }
    let m2 = grid.points() as f64;
    grid.length() * grid.length() / (m2 * m2) * sum
}

/// Original free energy
/// `E(phi) = ||(lap+beta)phi||^2/2 + integral(phi^4/4 - eps/2 phi^2)`.
pub fn original_energy(phi: &Field, p: &ModelParams) -> f64 {
    let quad = 0.5 * shifted_gradient_sq(phi, p.beta);
    let nl: f64 = phi
        .values()
        .iter()
        .map(|&v| 0.25 * v.powi(4) - 0.5 * p.epsilon * v * v)
        .sum::<f64>()
        * phi.grid().cell_area();
    quad + nl
}

/// SAV variable `r = sqrt(E1(phi) + C0)`; errors when the radicand is not
/// positive (C0 too small for this state).
pub fn sav_r(phi: &Field, p: &ModelParams) -> Result<f64> {
    let radicand = e1(phi, p) + p.c0;
    if radicand <= 0.0 {
        return Err(PfcError::C0TooSmall { radicand });
    }
    Ok(radicand.sqrt())
}

/// Modified energy `Ebar(phi, r) = ||(lap+beta)phi||^2/2 + S/2 ||phi||^2 + r^2`.
pub fn modified_energy(phi: &Field, r: f64, p: &ModelParams) -> f64 {
    0.5 * shifted_gradient_sq(phi, p.beta) + 0.5 * p.s * l2_norm(phi).powi(2) + r * r
}

/// Resolves a [`C0Policy`] against the reference step size and initial field.
/// A `Fixed` value that violates `C0/2 <= E1(phi0)+C0 <= 2*C0` is kept but
/// reported through the returned warning.
pub fn resolve_c0(
    policy: C0Policy,
    tau_ref: f64,
    phi0: &Field,
    beta: f64,
    epsilon: f64,
    s: f64,
) -> Result<(f64, Option<String>)> {
    if !(tau_ref > 0.0) {
        return Err(PfcError::InvalidParameter(format!(
            "reference step for C0 resolution must be positive, got {tau_ref}"
        )));
    }
    let probe = ModelParams::new(beta, epsilon, s, 1.0)?;
    let e1_0 = e1(phi0, &probe);
    match policy {
        C0Policy::Fixed(v) => {
            if !(v > 0.0) {
                return Err(PfcError::InvalidParameter(format!(
                    "fixed C0 must be positive, got {v}"
                )));
            }
            let warning = if e1_0 < -0.5 * v || e1_0 > v {
                Some(format!(
                    "fixed C0 = {v} violates C0/2 <= E1(phi0)+C0 <= 2*C0 (E1(phi0) = {e1_0:.6e})"
                ))
            } else {
                None
            };
            Ok((v, warning))
        }
        C0Policy::InverseTau => Ok(((1.0 / tau_ref).max(2.0 * e1_0.abs()), None)),
    }
}
