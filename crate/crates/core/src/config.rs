//! Run configuration: a flat `key = value` text format (one pair per line,
//! `#` comments), documented in the repository README.

use crate::adaptive::{ratio_root, AdaptiveParams};
use crate::error::{PfcError, Result};
use crate::model::C0Policy;

/// Which initial condition a run starts from.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    /// `sin(pi x/16) cos(pi y/16)` on `(0, 32)^2`.
    Smooth,
    /// Constant mean plus uniform noise.
    Random { mean: f64, amplitude: f64 },
    /// Three rotated crystallites in a supercooled background.
    Polycrystal,
}

/// Temporal mesh requested by the config.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    Uniform {
        tau: f64,
    },
    Perturbed {
        tau: f64,
        fraction: f64,
    },
    Adaptive {
        tau_min: f64,
        tau_max: f64,
        gamma_ada: f64,
        ratio_cap: Option<f64>,
    },
}

/// Which energy feeds the adaptive controller's `|E'(t)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdaptEnergy {
    Original,
    Modified,
}

/// Parameters of the convergence-study drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    /// `study-time` on uniform meshes: the list of step sizes.
    pub taus: Vec<f64>,
    /// `study-time` on perturbed meshes: the list of step counts.
    pub step_counts: Vec<usize>,
    pub perturbed: bool,
    pub reference_tau: f64,
    /// `study-space`: grid sizes and the reference grid.
    pub ms: Vec<usize>,
    pub reference_m: usize,
    /// When set, every study run (reference included) uses
    /// `C0 = scale / tau_max` of its own mesh instead of the shared policy,
    /// keeping the auxiliary-variable coupling error at second order across
    /// the whole refinement ladder.
    pub c0_scale: Option<f64>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            taus: vec![0.1, 0.05, 0.025, 0.0125],
            step_counts: vec![20, 40, 80, 160],
            perturbed: false,
            reference_tau: 1.0 / 640.0,
            ms: vec![8, 16, 32],
            reference_m: 64,
            c0_scale: None,
        }
    }
}

/// Fully parsed run configuration with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub m: usize,
    pub length: f64,
    pub t_end: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub s: f64,
    pub c0: C0Policy,
    pub sigma: f64,
    pub mesh: MeshSpec,
    pub adapt_energy: AdaptEnergy,
    pub seed: u64,
    pub dealias: bool,
    pub starter: bool,
    pub snapshot_times: Vec<f64>,
    pub study: StudyConfig,
}

/// Resolved adaptive parameters with the stability cap enforced.
pub fn resolve_adaptive(spec: &MeshSpec, sigma: f64) -> Result<Option<AdaptiveParams>> {
    match spec {
        MeshSpec::Adaptive {
            tau_min,
            tau_max,
            gamma_ada,
            ratio_cap,
        } => {
            let root = ratio_root(sigma)?;
            let cap = match ratio_cap {
                None => {
                    if root.is_finite() {
                        root
                    } else {
                        f64::MAX
                    }
                }
                Some(v) => {
                    if *v > root {
                        return Err(PfcError::InvalidParameter(format!(
                            "ratio_cap = {v} exceeds the stability limit gamma**({sigma}) = {root:.4}"
                        )));
                    }
                    *v
                }
            };
            Ok(Some(AdaptiveParams::new(
                *tau_min, *tau_max, *gamma_ada, cap,
            )?))
        }
        _ => Ok(None),
    }
}

struct RawEntry {
    line: usize,
    value: String,
    used: std::cell::Cell<bool>,
}

struct RawConfig {
    entries: std::collections::HashMap<String, RawEntry>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = std::collections::HashMap::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(PfcError::Config {
                    line: line_no,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = key.trim().to_string();
            if entries.contains_key(&key) {
                return Err(PfcError::Config {
                    line: line_no,
                    message: format!("duplicate key `{key}`"),
                });
            }
            entries.insert(
                key,
                RawEntry {
                    line: line_no,
                    value: value.trim().to_string(),
                    used: std::cell::Cell::new(false),
                },
            );
        }
        Ok(Self { entries })
    }

    fn get(&self, key: &str) -> Option<&RawEntry> {
        self.entries.get(key).inspect(|e| e.used.set(true))
    }

    fn parse_value<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(entry) => entry
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|_| PfcError::Config {
                    line: entry.line,
                    message: format!("`{key}` expects {what}, got `{}`", entry.value),
                }),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.parse_value::<f64>(key, "a number")?.unwrap_or(default))
    }

    fn require_f64(&self, key: &str) -> Result<f64> {
        self.parse_value::<f64>(key, "a number")?
            .ok_or_else(|| PfcError::Config {
                line: 0,
                message: format!("missing required key `{key}`"),
            })
    }

    fn list_f64(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(entry) => entry
                .value
                .split(',')
                .map(|tok| tok.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| PfcError::Config {
                    line: entry.line,
                    message: format!("`{key}` expects a comma-separated list of numbers"),
                }),
        }
    }

    fn list_usize(&self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.get(key) {
            None => Ok(None),
            Some(entry) => entry
                .value
                .split(',')
                .map(|tok| tok.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| PfcError::Config {
                    line: entry.line,
                    message: format!("`{key}` expects a comma-separated list of integers"),
                }),
        }
    }

    fn unknown_keys(&self) -> Option<(usize, String)> {
        self.entries
            .iter()
            .filter(|(_, e)| !e.used.get())
            .min_by_key(|(_, e)| e.line)
            .map(|(k, e)| (e.line, k.clone()))
    }
}

/// Parses the flat `key = value` grammar into a validated [`RunConfig`].
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw = RawConfig::parse(text)?;

    let scenario_entry = raw.get("scenario").ok_or_else(|| PfcError::Config {
        line: 0,
        message: "missing required key `scenario`".into(),
    })?;
    let (default_l, default_m, default_eps) = match scenario_entry.value.as_str() {
        "smooth" => (32.0, 64, 0.025),
        "random" => (64.0, 128, 0.1),
        "polycrystal" => (200.0, 256, 0.25),
        other => {
            return Err(PfcError::Config {
                line: scenario_entry.line,
                message: format!(
                    "unknown scenario `{other}` (expected smooth, random, or polycrystal)"
                ),
            })
        }
    };

    let mean = raw.f64_or("mean", 0.08)?;
    let amplitude = raw.f64_or("amplitude", 0.08)?;
    let scenario = match scenario_entry.value.as_str() {
        "smooth" => Scenario::Smooth,
        "random" => Scenario::Random { mean, amplitude },
        _ => Scenario::Polycrystal,
    };

    let t_end = raw.require_f64("T")?;
    if !(t_end > 0.0) {
        return Err(PfcError::Config {
            line: 0,
            message: format!("T must be positive, got {t_end}"),
        });
    }
    let length = raw.f64_or("L", default_l)?;
    let m = raw
        .parse_value::<usize>("M", "a positive even integer")?
        .unwrap_or(default_m);
    let beta = raw.f64_or("beta", 1.0)?;
    let epsilon = raw.f64_or("epsilon", default_eps)?;
    let s = raw.f64_or("S", epsilon)?;
    let sigma = raw.f64_or("sigma", 1.0)?;
    if !(0.5..=1.0).contains(&sigma) {
        let line = raw.get("sigma").map_or(0, |e| e.line);
        return Err(PfcError::Config {
            line,
            message: format!("sigma must lie in [1/2, 1], got {sigma}"),
        });
    }

    let c0 = match raw.get("c0") {
        None => C0Policy::InverseTau,
        Some(entry) => match entry.value.as_str() {
            "inv_tau" => C0Policy::InverseTau,
            v => match v.parse::<f64>() {
                Ok(x) if x > 0.0 => C0Policy::Fixed(x),
                _ => {
                    return Err(PfcError::Config {
                        line: entry.line,
                        message: format!("`c0` expects `inv_tau` or a positive number, got `{v}`"),
                    })
                }
            },
        },
    };

    let mesh = match raw.get("mesh") {
        None => {
            return Err(PfcError::Config {
                line: 0,
                message: "missing required key `mesh`".into(),
            })
        }
        Some(entry) => match entry.value.as_str() {
            "uniform" => MeshSpec::Uniform {
                tau: raw.require_f64("tau")?,
            },
            "perturbed" => MeshSpec::Perturbed {
                tau: raw.require_f64("tau")?,
                fraction: raw.f64_or("fraction", 0.4)?,
            },
            "adaptive" => {
                let ratio_cap = match raw.get("ratio_cap") {
                    None => None,
                    Some(cap) => match cap.value.as_str() {
                        "default" | "none" => None,
                        v => match v.parse::<f64>() {
                            Ok(x) if x > 1.0 => Some(x),
                            _ => {
                                return Err(PfcError::Config {
                                    line: cap.line,
                                    message: format!(
                                        "`ratio_cap` expects `default` or a number > 1, got `{v}`"
                                    ),
                                })
                            }
                        },
                    },
                };
                MeshSpec::Adaptive {
                    tau_min: raw.f64_or("tau_min", 0.01)?,
                    tau_max: raw.f64_or("tau_max", 1.0)?,
                    gamma_ada: raw.f64_or("gamma_ada", 1e5)?,
                    ratio_cap,
                }
            }
            other => {
                return Err(PfcError::Config {
                    line: entry.line,
                    message: format!(
                        "unknown mesh `{other}` (expected uniform, perturbed, or adaptive)"
                    ),
                })
            }
        },
    };

    let adapt_energy = match raw.get("adapt_energy") {
        None => AdaptEnergy::Original,
        Some(entry) => match entry.value.as_str() {
            "original" => AdaptEnergy::Original,
            "modified" => AdaptEnergy::Modified,
            other => {
                return Err(PfcError::Config {
                    line: entry.line,
                    message: format!("`adapt_energy` expects original or modified, got `{other}`"),
                })
            }
        },
    };

    let parse_bool = |key: &str, default: bool| -> Result<bool> {
        match raw.get(key) {
            None => Ok(default),
            Some(entry) => match entry.value.as_str() {
                "true" | "on" | "yes" => Ok(true),
                "false" | "off" | "no" => Ok(false),
                other => Err(PfcError::Config {
                    line: entry.line,
                    message: format!("`{key}` expects true/false, got `{other}`"),
                }),
            },
        }
    };

    let seed = raw
        .parse_value::<u64>("seed", "an unsigned integer")?
        .unwrap_or(1);
    let dealias = parse_bool("dealias", false)?;
    let starter = parse_bool("starter", true)?;
    let snapshot_times = raw.list_f64("snapshot_times")?.unwrap_or_default();
    for &t in &snapshot_times {
        if !(0.0..=t_end).contains(&t) {
            return Err(PfcError::Config {
                line: raw.get("snapshot_times").map_or(0, |e| e.line),
                message: format!("snapshot time {t} outside [0, T]"),
            });
        }
    }

    let defaults = StudyConfig::default();
    let study = StudyConfig {
        taus: raw.list_f64("study_taus")?.unwrap_or(defaults.taus),
        step_counts: raw
            .list_usize("study_steps")?
            .unwrap_or(defaults.step_counts),
        perturbed: match raw.get("study_mesh") {
            None => false,
            Some(entry) => match entry.value.as_str() {
                "uniform" => false,
                "perturbed" => true,
                other => {
                    return Err(PfcError::Config {
                        line: entry.line,
                        message: format!(
                            "`study_mesh` expects uniform or perturbed, got `{other}`"
                        ),
                    })
                }
            },
        },
        reference_tau: raw.f64_or("reference_tau", defaults.reference_tau)?,
        ms: raw.list_usize("study_ms")?.unwrap_or(defaults.ms),
        reference_m: raw
            .parse_value::<usize>("reference_m", "a positive even integer")?
            .unwrap_or(defaults.reference_m),
        c0_scale: raw.parse_value::<f64>("study_c0_scale", "a positive number")?,
    };

    if let Some((line, key)) = raw.unknown_keys() {
        return Err(PfcError::Config {
            line,
            message: format!("unknown key `{key}`"),
        });
    }

    Ok(RunConfig {
        scenario,
        m,
        length,
        t_end,
        beta,
        epsilon,
        s,
        c0,
        sigma,
        mesh,
        adapt_energy,
        seed,
        dealias,
        starter,
        snapshot_times,
        study,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config("scenario = smooth\nT = 1.0\nmesh = uniform\ntau = 0.1\n").unwrap();
        assert_eq!(cfg.scenario, Scenario::Smooth);
        assert_eq!(cfg.m, 64);
        assert_eq!(cfg.length, 32.0);
        assert_eq!(cfg.beta, 1.0);
        assert_eq!(cfg.epsilon, 0.025);
        assert_eq!(cfg.s, cfg.epsilon);
        assert_eq!(cfg.sigma, 1.0);
        assert_eq!(cfg.c0, C0Policy::InverseTau);
        assert!(!cfg.dealias);
        assert!(cfg.starter);
    }

    #[test]
    fn sigma_out_of_range_is_rejected_with_line() {
        let err =
            parse_config("scenario = smooth\nT = 1\nmesh = uniform\ntau = 0.1\nsigma = 0.3\n")
                .unwrap_err();
        match err {
            PfcError::Config { line, message } => {
                assert_eq!(line, 5);
                assert!(message.contains("[1/2, 1]"), "{message}");
            }
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = parse_config("scenario = smooth\nT = 1\nmesh = uniform\ntau = 0.1\nwhat = 3\n")
            .unwrap_err();
        match err {
            PfcError::Config { line, message } => {
                assert_eq!(line, 5);
                assert!(message.contains("unknown key"), "{message}");
            }
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn adaptive_and_c0_forms() {
        let cfg = parse_config(
            "scenario = random\nT = 200\nmesh = adaptive\ntau_min = 0.01\ntau_max = 1\n\
             gamma_ada = 1e5\nc0 = inv_tau\nseed = 9\n",
        )
        .unwrap();
        assert_eq!(cfg.c0, C0Policy::InverseTau);
        assert_eq!(
            cfg.mesh,
            MeshSpec::Adaptive {
                tau_min: 0.01,
                tau_max: 1.0,
                gamma_ada: 1e5,
                ratio_cap: None
            }
        );
        let params = resolve_adaptive(&cfg.mesh, 1.0).unwrap().unwrap();
        assert!((params.ratio_cap - 4.8645).abs() < 1e-3);

        let cfg =
            parse_config("scenario = smooth\nT = 1\nmesh = uniform\ntau = .1\nc0 = 250\n").unwrap();
        assert_eq!(cfg.c0, C0Policy::Fixed(250.0));
    }

    #[test]
    fn ratio_cap_above_stability_limit_is_rejected() {
        let cfg =
            parse_config("scenario = random\nT = 10\nmesh = adaptive\nratio_cap = 6.0\n").unwrap();
        assert!(resolve_adaptive(&cfg.mesh, 1.0).is_err());
        // but fine for sigma = 0.75 whose root is larger
        assert!(resolve_adaptive(&cfg.mesh, 0.75).unwrap().is_some());
    }

    #[test]
    fn comments_lists_and_booleans() {
        let cfg = parse_config(
            "# smoke\nscenario = smooth # trailing\nT = 2.0\nmesh = perturbed\ntau = 0.05\n\
             fraction = 0.3\nsnapshot_times = 0, 1, 2\ndealias = on\nstudy_ms = 8, 16\n",
        )
        .unwrap();
        assert_eq!(
            cfg.mesh,
            MeshSpec::Perturbed {
                tau: 0.05,
                fraction: 0.3
            }
        );
        assert_eq!(cfg.snapshot_times, vec![0.0, 1.0, 2.0]);
        assert!(cfg.dealias);
        assert_eq!(cfg.study.ms, vec![8, 16]);
    }
}
