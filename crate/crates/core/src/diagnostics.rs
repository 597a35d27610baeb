//! Energy and mass monitors, the discrete modified energy behind the
//! stability bound, error norms, and the convergence-order calculator.

use crate::adaptive::stability_g;
use crate::error::{PfcError, Result};
use crate::field::{same_grid, Field};
use crate::integrator::StepState;
use crate::model::{modified_energy, ModelParams};
use crate::spectral::hminus1_norm;

/// One row of the energy log.
#[derive(Debug, Clone, Copy)]
pub struct EnergyRecord {
    pub step: u64,
    pub t: f64,
    /// Step size that produced this state (the committed first step for row 0).
    pub tau: f64,
    /// Ratio `tau_{n+1}/tau_n` entering the discrete modified energy of this
    /// row (0 while undefined).
    pub gamma: f64,
    pub e_original: f64,
    pub e_modified_discrete: f64,
    pub r: f64,
    /// `r^{n+1}/sqrt(E1^n + C0)` of the step into this state (1 for row 0).
    pub r_ratio: f64,
    /// Mean of the phase field.
    pub mass: f64,
}

/// Exact header of the energy CSV.
pub const ENERGY_CSV_HEADER: &str =
    "step,t,tau,gamma,E_original,E_modified_discrete,r,r_ratio,mass";

/// Serializes records with 17 significant digits so the doubles round-trip.
pub fn format_energy_csv(records: &[EnergyRecord]) -> String {
    let mut out = String::from(ENERGY_CSV_HEADER);
    out.push('\n');
    for rec in records {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            rec.step,
            rec.t,
            rec.tau,
            rec.gamma,
            rec.e_original,
            rec.e_modified_discrete,
            rec.r,
            rec.r_ratio,
            rec.mass
        ));
    }
    out
}

/// Discrete modified energy
/// `Ebar(phi^n, r^n) + g(gamma_next) * ||grad^{-1}(phi^n - phi^{n-1})||^2 / tau_n`
/// with `g(gamma) = (2*sigma-1)*gamma^(3/2) / (2*(1+gamma))`. This is the
/// quantity that is provably nonincreasing while all ratios stay below
/// `gamma**(sigma)`.
pub fn discrete_modified_energy(
    state: &StepState,
    sigma: f64,
    gamma_next: f64,
    p: &ModelParams,
) -> Result<f64> {
    let base = modified_energy(&state.phi_curr, state.r_curr, p);
    if state.tau_prev <= 0.0 || gamma_next <= 0.0 {
        return Ok(base);
    }
    let incr = state.phi_curr.axpy(1.0, &state.phi_prev, -1.0)?;
    if incr.max_abs() == 0.0 {
        return Ok(base);
    }
    let weight = stability_g(gamma_next, sigma);
    if weight == 0.0 {
        return Ok(base);
    }
    let hm1 = hminus1_norm(&incr)?;
    Ok(base + weight * hm1 * hm1 / state.tau_prev)
}

/// Max-norm distance between two fields on the same grid.
pub fn linf_error(f: &Field, reference: &Field) -> Result<f64> {
    same_grid(f, reference)?;
    Ok(f.values()
        .iter()
        .zip(reference.values())
        .fold(0.0f64, |acc, (&a, &b)| acc.max((a - b).abs())))
}

/// Pairwise observed orders
/// `log10(err_i / err_{i+1}) / log10(tau_i / tau_{i+1})`
/// for a refinement list of `(tau_max, error)` pairs.
pub fn convergence_order(errs: &[(f64, f64)]) -> Result<Vec<f64>> {
    if errs.len() < 2 {
        return Err(PfcError::InvalidParameter(
            "convergence order needs at least two (tau, error) pairs".into(),
        ));
    }
    for &(tau, err) in errs {
        if !(tau > 0.0 && err >= 0.0) {
            return Err(PfcError::InvalidParameter(format!(
                "invalid study entry (tau = {tau}, error = {err})"
            )));
        }
    }
    let mut orders = Vec::with_capacity(errs.len() - 1);
    for pair in errs.windows(2) {
        let (tau0, err0) = pair[0];
        let (tau1, err1) = pair[1];
        if err0 == 0.0 || err1 == 0.0 {
            return Err(PfcError::InvalidParameter(
                "zero error in order computation".into(),
            ));
        }
        if tau0 == tau1 {
            return Err(PfcError::InvalidParameter(
                "repeated tau in order computation".into(),
            ));
        }
        orders.push((err0 / err1).log10() / (tau0 / tau1).log10());
    }
    Ok(orders)
}

/// `max_n |r_ratio - 1|` along a run.
pub fn r_tracking_error(records: &[EnergyRecord]) -> f64 {
    records
        .iter()
        .fold(0.0f64, |acc, rec| acc.max((rec.r_ratio - 1.0).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::model::sav_r;
    use crate::testutil::random_field;

    fn state_with(phi_prev: Field, phi_curr: Field, r: f64, tau: f64) -> StepState {
        StepState {
            phi_prev,
            phi_curr,
            r_curr: r,
            tau_prev: tau,
            t_curr: tau,
            step_index: 1,
        }
    }

    #[test]
    fn collapses_to_modified_energy_without_increment() {
        let grid = GridSpec::new(16, 8.0).unwrap();
        let p = ModelParams::with_defaults(0.2, 30.0).unwrap();
        let phi = random_field(grid, 1).map(|v| 0.2 * v).unwrap();
        let r = sav_r(&phi, &p).unwrap();
        let st = state_with(phi.clone(), phi.clone(), r, 0.1);
        let expect = modified_energy(&phi, r, &p);
        let got = discrete_modified_energy(&st, 1.0, 1.0, &p).unwrap();
        assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1.0));
    }

    #[test]
    fn sigma_half_drops_the_increment_term() {
        let grid = GridSpec::new(16, 8.0).unwrap();
        let p = ModelParams::with_defaults(0.2, 30.0).unwrap();
        let a = random_field(grid, 2).map(|v| 0.2 * v).unwrap();
        let shift = a.mean();
        let b = random_field(grid, 3).map(|v| 0.2 * v).unwrap();
        // give both the same mean so the increment is zero-mean
        let b = b.map(|v| v - b.mean() + shift).unwrap();
        let r = sav_r(&b, &p).unwrap();
        let st = state_with(a, b.clone(), r, 0.1);
        let got = discrete_modified_energy(&st, 0.5, 2.0, &p).unwrap();
        let expect = modified_energy(&b, r, &p);
        assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1.0));
    }

    #[test]
    fn unit_ratio_coefficient_is_one_quarter() {
        let grid = GridSpec::new(16, 8.0).unwrap();
        let p = ModelParams::with_defaults(0.2, 30.0).unwrap();
        let a = random_field(grid, 4).map(|v| 0.2 * v).unwrap();
        let shift = a.mean();
        let b = random_field(grid, 5).map(|v| 0.2 * v).unwrap();
        let b = b.map(|v| v - b.mean() + shift).unwrap();
        let r = sav_r(&b, &p).unwrap();
        let tau = 0.25;
        let st = state_with(a.clone(), b.clone(), r, tau);
        let incr = b.axpy(1.0, &a, -1.0).unwrap();
        let hm1 = hminus1_norm(&incr).unwrap();
        // g(1) at sigma=1 is 1^{3/2}/(2+2) = 1/4
        let expect = modified_energy(&b, r, &p) + 0.25 * hm1 * hm1 / tau;
        let got = discrete_modified_energy(&st, 1.0, 1.0, &p).unwrap();
        assert!((got - expect).abs() <= 1e-11 * expect.abs().max(1.0));
        // never below the plain modified energy for sigma >= 1/2
        assert!(got >= modified_energy(&b, r, &p) - 1e-12);
    }

    #[test]
    fn linf_cases() {
        let grid = GridSpec::new(8, 4.0).unwrap();
        let f = random_field(grid, 6);
        assert_eq!(linf_error(&f, &f).unwrap(), 0.0);
        let shifted = f.map(|v| v + 0.37).unwrap();
        assert!((linf_error(&shifted, &f).unwrap() - 0.37).abs() < 1e-15);

        let g = random_field(grid, 7);
        let expected = f
            .values()
            .iter()
            .zip(g.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert_eq!(linf_error(&f, &g).unwrap(), expected);

        let other = random_field(GridSpec::new(16, 4.0).unwrap(), 8);
        assert!(linf_error(&f, &other).is_err());
    }

    #[test]
    fn convergence_order_cases() {
        // exact quartering under halving
        let orders = convergence_order(&[(0.1, 1e-2), (0.05, 2.5e-3)]).unwrap();
        assert!((orders[0] - 2.0).abs() < 1e-12);

        // the published random-mesh rows reproduce their reported order
        let orders = convergence_order(&[(7.91e-2, 1.45e-4), (4.12e-2, 2.95e-5)]).unwrap();
        assert!((orders[0] - 2.44).abs() < 0.01, "order = {}", orders[0]);

        // identical errors give order zero
        let orders = convergence_order(&[(0.2, 1e-3), (0.1, 1e-3)]).unwrap();
        assert_eq!(orders[0], 0.0);

        assert!(convergence_order(&[(0.1, 1e-3)]).is_err());
        assert!(convergence_order(&[(0.1, 0.0), (0.05, 1e-4)]).is_err());
    }

    #[test]
    fn r_tracking_cases() {
        let base = EnergyRecord {
            step: 0,
            t: 0.0,
            tau: 0.1,
            gamma: 0.0,
            e_original: 0.0,
            e_modified_discrete: 0.0,
            r: 1.0,
            r_ratio: 1.0,
            mass: 0.0,
        };
        let recs = [
            EnergyRecord {
                r_ratio: 1.0,
                ..base
            },
            EnergyRecord {
                r_ratio: 1.001,
                t: 0.1,
                ..base
            },
            EnergyRecord {
                r_ratio: 0.999,
                t: 0.2,
                ..base
            },
        ];
        assert!((r_tracking_error(&recs) - 0.001).abs() < 1e-15);
        assert_eq!(r_tracking_error(&recs[..1]), 0.0);
    }

    #[test]
    fn csv_round_trips_doubles() {
        let rec = EnergyRecord {
            step: 3,
            t: 0.1 + 0.2, // deliberately non-representable
            tau: 1.0 / 3.0,
            gamma: 4.8645,
            e_original: -123.456789012345678,
            e_modified_discrete: 1e-17,
            r: 2.0f64.sqrt(),
            r_ratio: 1.0 - 1e-13,
            mass: 0.08,
        };
        let text = format_energy_csv(&[rec]);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), ENERGY_CSV_HEADER);
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "3");
        assert_eq!(row[1].parse::<f64>().unwrap(), rec.t);
        assert_eq!(row[2].parse::<f64>().unwrap(), rec.tau);
        assert_eq!(row[4].parse::<f64>().unwrap(), rec.e_original);
        assert_eq!(row[5].parse::<f64>().unwrap(), rec.e_modified_discrete);
        assert_eq!(row[7].parse::<f64>().unwrap(), rec.r_ratio);
    }
}
