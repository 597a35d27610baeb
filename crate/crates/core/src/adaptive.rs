//! Time-step selection: the energy-variation formula, the adjacent-ratio
//! stability limit `gamma**(sigma)`, and the stability functions `g` and `G`
//! behind the discrete energy law.

use crate::error::{PfcError, Result};

/// Parameters of the energy-variation step controller
/// `tau_{n+1} = min(max(tau_min, tau_max/sqrt(1 + gamma_ada*E'^2)), cap*tau_n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveParams {
    pub tau_min: f64,
    pub tau_max: f64,
    /// Sensitivity constant multiplying `|E'(t)|^2`; 1e5 suits the standard runs.
    pub gamma_ada: f64,
    /// Adjacent-ratio cap; defaults to `gamma**(sigma)` and must not exceed it.
    pub ratio_cap: f64,
}

impl AdaptiveParams {
    pub fn new(tau_min: f64, tau_max: f64, gamma_ada: f64, ratio_cap: f64) -> Result<Self> {
        if !(tau_min > 0.0 && tau_max >= tau_min) {
            return Err(PfcError::InvalidParameter(format!(
                "need 0 < tau_min <= tau_max, got {tau_min}, {tau_max}"
            )));
        }
        if !(gamma_ada > 0.0) {
            return Err(PfcError::InvalidParameter(format!(
                "gamma_ada must be positive, got {gamma_ada}"
            )));
        }
        if !(ratio_cap > 1.0) {
            return Err(PfcError::InvalidParameter(format!(
                "ratio cap must exceed 1, got {ratio_cap}"
            )));
        }
        Ok(Self {
            tau_min,
            tau_max,
            gamma_ada,
            ratio_cap,
        })
    }

    /// Controller with the cap set to `gamma**(sigma)`.
    pub fn with_default_cap(
        tau_min: f64,
        tau_max: f64,
        gamma_ada: f64,
        sigma: f64,
    ) -> Result<Self> {
        let cap = ratio_root(sigma)?;
        let cap = if cap.is_finite() { cap } else { f64::MAX };
        Self::new(tau_min, tau_max, gamma_ada, cap)
    }
}

/// `g(gamma) = (2*sigma - 1) * gamma^(3/2) / (2*(1 + gamma))`.
pub fn stability_g(gamma: f64, sigma: f64) -> f64 {
    (2.0 * sigma - 1.0) * gamma.powf(1.5) / (2.0 * (1.0 + gamma))
}

/// `G(s, z) = (2 + 4*sigma*s - (2*sigma-1)*s^(3/2))/(1+s)
///            - (2*sigma-1)*z^(3/2)/(1+z)`.
pub fn stability_big_g(s: f64, z: f64, sigma: f64) -> f64 {
    let first = (2.0 + 4.0 * sigma * s - (2.0 * sigma - 1.0) * s.powf(1.5)) / (1.0 + s);
    first - (2.0 * sigma - 1.0) * z.powf(1.5) / (1.0 + z)
}

/// Positive root `gamma**(sigma)` of `G(z, z) = 0`, located by bisection on
/// `[1, 1e6]` to absolute tolerance 1e-6. Returns `+inf` for `sigma = 1/2`
/// (the root diverges there). Decreasing in `sigma`, with
/// `gamma**(1) ~ 4.8645`.
pub fn ratio_root(sigma: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&sigma) {
        return Err(PfcError::InvalidParameter(format!(
            "sigma must lie in [1/2, 1], got {sigma}"
        )));
    }
    if sigma == 0.5 {
        return Ok(f64::INFINITY);
    }
    let f = |z: f64| stability_big_g(z, z, sigma);
    let (mut lo, mut hi) = (1.0, 1e6);
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(PfcError::InvalidParameter(format!(
            "no sign change for G(z,z) on [1, 1e6] at sigma = {sigma}"
        )));
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Backward difference of the original energy between two consecutive
/// records `(t, E)`; the controller only uses its magnitude.
pub fn energy_rate(older: (f64, f64), newer: (f64, f64)) -> Result<f64> {
    let dt = newer.0 - older.0;
    if !(dt > 0.0) {
        return Err(PfcError::InvalidParameter(format!(
            "energy rate needs increasing times, got dt = {dt}"
        )));
    }
    Ok((newer.1 - older.1) / dt)
}

/// The adaptive formula. The ratio cap is applied last, so it wins over the
/// `tau_min` floor when the two conflict (a shrinking step never threatens
/// stability; growth must respect the cap before anything else).
pub fn next_step_size(energy_rate: f64, tau_n: f64, p: &AdaptiveParams) -> f64 {
    let proposal = p.tau_max / (1.0 + p.gamma_ada * energy_rate * energy_rate).sqrt();
    proposal.max(p.tau_min).min(p.ratio_cap * tau_n)
}
