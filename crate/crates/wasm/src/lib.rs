//! Browser demo: drives the solver interactively and hands RGBA frames plus
//! energy/step-size traces to a static page. JavaScript blits `field_rgba`
//! into a `<canvas>` via `ImageData`; no framework, no JS-side numerics.

use wasm_bindgen::prelude::*;

use pfc_core::adaptive::{energy_rate, next_step_size, ratio_root, AdaptiveParams};
use pfc_core::field::Field;
use pfc_core::grid::GridSpec;
use pfc_core::integrator::Stepper;
use pfc_core::model::{e1, ModelParams};
use pfc_core::scenarios::{default_polycrystal_blocks, ic_polycrystal, ic_random, ic_smooth};

/// Interactive time-adaptive simulation of one scenario.
#[wasm_bindgen]
pub struct Simulation {
    stepper: Stepper,
    controller: AdaptiveParams,
    /// (t, original energy) per committed state.
    energy_trace: Vec<(f64, f64)>,
    tau_trace: Vec<(f64, f64)>,
    last_r_ratio: f64,
}

fn build(phi0: Field, epsilon: f64, tau_min: f64, tau_max: f64) -> Result<Simulation, JsValue> {
    let err = |e: pfc_core::PfcError| JsValue::from_str(&e.to_string());
    let grid = phi0.grid();
    let area = grid.length() * grid.length();
    let s = epsilon;
    // F(phi) >= -(S+eps)^2/4 pointwise, so this C0 keeps E1 + C0 positive for
    // every reachable state
    let well_depth = (s + epsilon) * (s + epsilon) / 4.0;
    let probe = ModelParams::new(1.0, epsilon, s, 1.0).map_err(err)?;
    let c0 = well_depth * area + 1.0 / tau_min + 2.0 * e1(&phi0, &probe).abs() + 1.0;
    let params = ModelParams::new(1.0, epsilon, s, c0).map_err(err)?;
    let cap = ratio_root(1.0).map_err(err)?;
    let controller = AdaptiveParams::new(tau_min, tau_max, 1e5, cap).map_err(err)?;
    let stepper = Stepper::new(phi0, params, 1.0, false).map_err(err)?;
    let mut sim = Simulation {
        stepper,
        controller,
        energy_trace: Vec::new(),
        tau_trace: Vec::new(),
        last_r_ratio: 1.0,
    };
    sim.record();
    Ok(sim)
}

#[wasm_bindgen]
impl Simulation {
    /// Supercooled-liquid phase transition from uniform noise.
    pub fn phase_transition(
        m: usize,
        length: f64,
        epsilon: f64,
        mean: f64,
        amplitude: f64,
        seed: u64,
        tau_max: f64,
    ) -> Result<Simulation, JsValue> {
        let grid = GridSpec::new(m, length).map_err(|e| JsValue::from_str(&e.to_string()))?;
        let phi0 = ic_random(grid, mean, amplitude, seed)
            .map_err(|e| JsValue::from_str(&e.to_string()))?;
        build(phi0, epsilon, 0.01, tau_max)
    }

    /// Three rotated crystallites growing into the supercooled background.
    pub fn polycrystal(
        m: usize,
        length: f64,
        epsilon: f64,
        tau_max: f64,
    ) -> Result<Simulation, JsValue> {
        let grid = GridSpec::new(m, length).map_err(|e| JsValue::from_str(&e.to_string()))?;
        let phi0 = ic_polycrystal(grid, &default_polycrystal_blocks(length))
            .map_err(|e| JsValue::from_str(&e.to_string()))?;
        build(phi0, epsilon, 0.01, tau_max)
    }

    /// The smooth accuracy-test initial condition.
    pub fn smooth(
        m: usize,
        length: f64,
        epsilon: f64,
        tau_max: f64,
    ) -> Result<Simulation, JsValue> {
        let grid = GridSpec::new(m, length).map_err(|e| JsValue::from_str(&e.to_string()))?;
        build(ic_smooth(grid), epsilon, 0.01, tau_max)
    }

    fn record(&mut self) {
        let report = self.stepper.energy_report();
        self.energy_trace
            .push((self.stepper.t(), report.e_original));
        if self.stepper.step_index() > 0 {
            self.tau_trace
                .push((self.stepper.t(), self.stepper.tau_prev()));
        }
    }

    /// Advances up to `max_steps` with the energy-variation controller;
    /// returns the number of steps taken.
    pub fn advance(&mut self, max_steps: u32) -> Result<u32, JsValue> {
        let mut taken = 0;
        for _ in 0..max_steps {
            let n = self.energy_trace.len();
            let tau = if self.stepper.step_index() < 2 {
                self.controller.tau_min
            } else {
                let older = self.energy_trace[n - 2];
                let newer = self.energy_trace[n - 1];
                let rate =
                    energy_rate(older, newer).map_err(|e| JsValue::from_str(&e.to_string()))?;
                next_step_size(rate.abs(), self.stepper.tau_prev(), &self.controller)
            };
            let diag = self
                .stepper
                .advance(tau)
                .map_err(|e| JsValue::from_str(&e.to_string()))?;
            self.last_r_ratio = diag.r_ratio;
            self.record();
            taken += 1;
        }
        Ok(taken)
    }

    pub fn set_tau_max(&mut self, tau_max: f64) {
        if tau_max >= self.controller.tau_min {
            self.controller.tau_max = tau_max;
        }
    }

    pub fn m(&self) -> usize {
        self.stepper.phi().grid().m()
    }

    pub fn t(&self) -> f64 {
        self.stepper.t()
    }

    pub fn tau(&self) -> f64 {
        self.stepper.tau_prev()
    }

    pub fn steps(&self) -> u32 {
        self.stepper.step_index() as u32
    }

    pub fn energy(&self) -> f64 {
        self.stepper.energy_report().e_original
    }

    pub fn mass(&self) -> f64 {
        self.stepper.phi().mean()
    }

    pub fn r_ratio(&self) -> f64 {
        self.last_r_ratio
    }

    /// Flattened `(t, E)` pairs of the original-energy trace.
    pub fn energy_trace(&self) -> Vec<f64> {
        self.energy_trace
            .iter()
            .flat_map(|&(t, e)| [t, e])
            .collect()
    }

    /// Flattened `(t, tau)` pairs of the committed step sizes.
    pub fn tau_trace(&self) -> Vec<f64> {
        self.tau_trace
            .iter()
            .flat_map(|&(t, tau)| [t, tau])
            .collect()
    }

    /// Current field as RGBA bytes (row-major, `m x m`), normalized to the
    /// frame's own range under a blue/white/orange diverging map.
    pub fn field_rgba(&self) -> Vec<u8> {
        let values = self.stepper.phi().values();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let span = (hi - lo).max(1e-12);
        let mut out = Vec::with_capacity(values.len() * 4);
        for &v in values {
            let t = (v - lo) / span;
            let (r, g, b) = diverging(t);
            out.extend_from_slice(&[r, g, b, 255]);
        }
        out
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

fn diverging(t: f64) -> (u8, u8, u8) {
    // 0 -> deep blue, 0.5 -> near white, 1 -> burnt orange
    let (r, g, b) = if t < 0.5 {
        let u = t * 2.0;
        (
            lerp(0.13, 0.97, u),
            lerp(0.22, 0.96, u),
            lerp(0.58, 0.94, u),
        )
    } else {
        let u = (t - 0.5) * 2.0;
        (
            lerp(0.97, 0.80, u),
            lerp(0.96, 0.25, u),
            lerp(0.94, 0.10, u),
        )
    };
    ((r * 255.0) as u8, (g * 255.0) as u8, (b * 255.0) as u8)
}

/// Stability-limit curve: flattened `(sigma, gamma**(sigma))` pairs over
/// `sigma` in `[0.51, 1]`. The root diverges toward `sigma = 1/2`.
#[wasm_bindgen]
pub fn stability_root_curve(samples: usize) -> Vec<f64> {
    let n = samples.max(2);
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let sigma = 0.51 + (1.0 - 0.51) * i as f64 / (n - 1) as f64;
        if let Ok(root) = ratio_root(sigma) {
            out.extend_from_slice(&[sigma, root]);
        }
    }
    out
}

/// Linear growth rate of a perturbation mode about the constant state
/// `phi_bar`: `lambda(kappa) = -kappa^2 ((beta - kappa^2)^2 + 3 phi_bar^2 - eps)`.
/// Positive values mark the pattern-forming band.
#[wasm_bindgen]
pub fn growth_rate_curve(
    beta: f64,
    epsilon: f64,
    phi_bar: f64,
    kappa_max: f64,
    samples: usize,
) -> Vec<f64> {
    let n = samples.max(2);
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let kappa = kappa_max * i as f64 / (n - 1) as f64;
        let k2 = kappa * kappa;
        let shifted = beta - k2;
        let rate = -k2 * (shifted * shifted + 3.0 * phi_bar * phi_bar - epsilon);
        out.extend_from_slice(&[kappa, rate]);
    }
    out
}
