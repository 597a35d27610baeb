//! Initial conditions and temporal-mesh generators for the three standard
//! experiments: the smooth accuracy test, the random-field phase transition,
//! and polycrystal growth in a supercooled liquid.

use crate::adaptive::AdaptiveParams;
use crate::error::{PfcError, Result};
use crate::field::Field;
use crate::grid::GridSpec;
use crate::rng::SplitMix64;

/// `phi0(x, y) = sin(pi x/16) cos(pi y/16)`; periodic when `L` is a multiple
/// of 32 (warns otherwise).
pub fn ic_smooth(grid: GridSpec) -> Field {
    let l = grid.length();
    if (l / 32.0 - (l / 32.0).round()).abs() > 1e-12 {
        eprintln!(
            "warning: smooth initial data is periodic only when L is a multiple of 32 (L = {l})"
        );
    }
    Field::from_fn(grid, |x, y| {
        (std::f64::consts::PI * x / 16.0).sin() * (std::f64::consts::PI * y / 16.0).cos()
    })
    .expect("bounded samples")
}

/// `mean + uniform(-amplitude, amplitude)` per sample, drawn from SplitMix64
/// (see `rng`) so the field is reproducible across platforms.
pub fn ic_random(grid: GridSpec, mean: f64, amplitude: f64, seed: u64) -> Result<Field> {
    if !(amplitude >= 0.0) {
        return Err(PfcError::InvalidParameter(format!(
            "perturbation amplitude must be nonnegative, got {amplitude}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let values = (0..grid.points())
        .map(|_| mean + amplitude * rng.next_symmetric())
        .collect();
    Field::new(grid, values)
}

/// One crystallite seed: an axis-aligned square block of side `2*half_width`,
/// lattice rotated by `theta`.
#[derive(Debug, Clone, Copy)]
pub struct CrystalBlock {
    pub center: (f64, f64),
    pub half_width: f64,
    pub theta: f64,
}

impl CrystalBlock {
    fn contains(&self, x: f64, y: f64) -> bool {
        (x - self.center.0).abs() <= self.half_width && (y - self.center.1).abs() <= self.half_width
    }

    fn overlaps(&self, other: &CrystalBlock) -> bool {
        (self.center.0 - other.center.0).abs() < self.half_width + other.half_width
            && (self.center.1 - other.center.1).abs() < self.half_width + other.half_width
    }
}

/// Background density of the supercooled liquid.
pub const POLYCRYSTAL_BACKGROUND: f64 = 0.285;

/// Crystallite lattice sampled in rotated coordinates
/// `x_l = x cos(theta) - y sin(theta)`, `y_l = x sin(theta) + y cos(theta)`:
/// `0.285 + 0.446*(cos(0.66 y_l/sqrt(3)) cos(0.66 x_l) - 0.5 cos(1.32 y_l/sqrt(3)))`.
pub fn crystallite_density(x: f64, y: f64, theta: f64) -> f64 {
    let (sin_t, cos_t) = theta.sin_cos();
    let xl = x * cos_t - y * sin_t;
    let yl = x * sin_t + y * cos_t;
    let sqrt3 = 3.0f64.sqrt();
    POLYCRYSTAL_BACKGROUND
        + 0.446 * ((0.66 / sqrt3 * yl).cos() * (0.66 * xl).cos() - 0.5 * (1.32 / sqrt3 * yl).cos())
}

/// Constant background with crystallite seeds inside disjoint blocks.
pub fn ic_polycrystal(grid: GridSpec, blocks: &[CrystalBlock]) -> Result<Field> {
    for (i, a) in blocks.iter().enumerate() {
        for b in &blocks[i + 1..] {
            if a.overlaps(b) {
                return Err(PfcError::InvalidParameter(format!(
                    "crystallite blocks at {:?} and {:?} overlap",
                    a.center, b.center
                )));
            }
        }
    }
    Field::from_fn(grid, |x, y| {
        for block in blocks {
            if block.contains(x, y) {
                return crystallite_density(x, y, block.theta);
            }
        }
        POLYCRYSTAL_BACKGROUND
    })
}

/// Three 40-wide blocks along the horizontal midline at `x = L/4, L/2, 3L/4`,
/// rotated by `-pi/4, 0, pi/4`.
pub fn default_polycrystal_blocks(length: f64) -> Vec<CrystalBlock> {
    let theta = [
        -std::f64::consts::FRAC_PI_4,
        0.0,
        std::f64::consts::FRAC_PI_4,
    ];
    (0..3)
        .map(|i| CrystalBlock {
            center: (length * (i as f64 + 1.0) / 4.0, length / 2.0),
            half_width: 20.0,
            theta: theta[i],
        })
        .collect()
}

/// `{0, tau, 2 tau, ..., T}` with the final step shortened to land on `T`.
pub fn mesh_uniform(tau: f64, t_end: f64) -> Vec<f64> {
    debug_assert!(tau > 0.0 && tau <= t_end);
    let mut times = vec![0.0];
    let mut i = 1u64;
    loop {
        let t = i as f64 * tau;
        if t >= t_end * (1.0 - 1e-12) {
            break;
        }
        times.push(t);
        i += 1;
    }
    times.push(t_end);
    times
}

/// Interior points of the uniform mesh jittered by `fraction*tau*rand`,
/// `rand` uniform in `[-1, 1)`; endpoints pinned at 0 and `T`. Requires
/// `fraction < 1/2` so the perturbed times stay strictly increasing.
pub fn mesh_random_perturbed(tau: f64, t_end: f64, fraction: f64, seed: u64) -> Result<Vec<f64>> {
    if !(0.0..0.5).contains(&fraction) {
        return Err(PfcError::InvalidParameter(format!(
            "perturbation fraction must lie in [0, 1/2), got {fraction}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let base = mesh_uniform(tau, t_end);
    let n = base.len();
    let times: Vec<f64> = base
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            if i == 0 || i == n - 1 {
                t
            } else {
                t + fraction * tau * rng.next_symmetric()
            }
        })
        .collect();
    debug_assert!(times.windows(2).all(|w| w[1] > w[0]));
    Ok(times)
}

/// First-step size honoring `tau_1 <= tau^(4/3)` (with constant 1):
/// `min(tau_max_plan, tau_max_plan^exponent)`.
pub fn starter_step(tau_max_plan: f64, exponent: f64) -> f64 {
    tau_max_plan.min(tau_max_plan.powf(exponent))
}

/// Temporal mesh selection for a run.
#[derive(Debug, Clone)]
pub enum MeshKind {
    Uniform { tau: f64 },
    RandomPerturbed { tau: f64, fraction: f64, seed: u64 },
    Adaptive(AdaptiveParams),
    Explicit(Vec<f64>),
}

/// A mesh plan: the kind, the final time, and the starter-step exponent
/// (`4/3` by default, applied to Uniform and Adaptive plans).
#[derive(Debug, Clone)]
pub struct MeshPlan {
    pub kind: MeshKind,
    pub t_end: f64,
    pub starter_exponent: Option<f64>,
}

pub const DEFAULT_STARTER_EXPONENT: f64 = 4.0 / 3.0;

impl MeshPlan {
    pub fn uniform(tau: f64, t_end: f64) -> Self {
        Self {
            kind: MeshKind::Uniform { tau },
            t_end,
            starter_exponent: Some(DEFAULT_STARTER_EXPONENT),
        }
    }

    pub fn random_perturbed(tau: f64, t_end: f64, fraction: f64, seed: u64) -> Self {
        Self {
            kind: MeshKind::RandomPerturbed {
                tau,
                fraction,
                seed,
            },
            t_end,
            starter_exponent: None,
        }
    }

    pub fn adaptive(params: AdaptiveParams, t_end: f64) -> Self {
        Self {
            kind: MeshKind::Adaptive(params),
            t_end,
            starter_exponent: Some(DEFAULT_STARTER_EXPONENT),
        }
    }

    pub fn explicit(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || times[0] != 0.0 {
            return Err(PfcError::InvalidParameter(
                "explicit mesh must start at 0 and contain at least one step".into(),
            ));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(PfcError::InvalidParameter(
                "explicit mesh times must be strictly increasing".into(),
            ));
        }
        let t_end = *times.last().unwrap();
        Ok(Self {
            kind: MeshKind::Explicit(times),
            t_end,
            starter_exponent: None,
        })
    }

    /// Largest planned step, used to resolve C0. For adaptive plans this is
    /// `tau_max`.
    pub fn reference_tau(&self) -> f64 {
        match &self.kind {
            MeshKind::Uniform { tau } => *tau,
            MeshKind::RandomPerturbed { tau, fraction, .. } => tau * (1.0 + 2.0 * fraction),
            MeshKind::Adaptive(p) => p.tau_max,
            MeshKind::Explicit(times) => {
                times.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max)
            }
        }
    }

    /// Fully prescribed step times, or `None` for adaptive plans. A Uniform
    /// plan with the starter constraint enabled opens with
    /// `starter_step(tau)`, ramps geometrically (growth factor at most 4) up
    /// to the uniform spacing, then marches with `tau` and shortens the final
    /// step to land exactly on `T`; every adjacent ratio stays at most 4.
    pub fn prescribed_times(&self) -> Option<Vec<f64>> {
        match &self.kind {
            MeshKind::Uniform { tau } => {
                let tau1 = self.starter_exponent.map(|exp| starter_step(*tau, exp));
                match tau1 {
                    None => Some(mesh_uniform(*tau, self.t_end)),
                    Some(tau1) if tau1 >= *tau => Some(mesh_uniform(*tau, self.t_end)),
                    Some(tau1) => {
                        let mut times = vec![0.0];
                        let mut t = 0.0;
                        let mut step = tau1;
                        loop {
                            let remaining = self.t_end - t;
                            if remaining <= step * (1.0 + 1e-12) {
                                times.push(self.t_end);
                                break;
                            }
                            t += step;
                            times.push(t);
                            step = (4.0 * step).min(*tau);
                        }
                        Some(times)
                    }
                }
            }
            MeshKind::RandomPerturbed {
                tau,
                fraction,
                seed,
            } => Some(
                mesh_random_perturbed(*tau, self.t_end, *fraction, *seed)
                    .expect("fraction validated at construction"),
            ),
            MeshKind::Adaptive(_) => None,
            MeshKind::Explicit(times) => Some(times.clone()),
        }
    }
}
