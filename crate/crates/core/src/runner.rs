//! The run loop (starter step, BDF2 marching, controller) and the
//! convergence-study drivers behind the CLI verbs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::adaptive::{energy_rate, next_step_size, stability_g};
use crate::config::{resolve_adaptive, AdaptEnergy, MeshSpec, RunConfig, Scenario};
use crate::diagnostics::{convergence_order, format_energy_csv, linf_error, EnergyRecord};
use crate::error::{PfcError, Result};
use crate::field::Field;
use crate::grid::GridSpec;
use crate::integrator::Stepper;
use crate::model::{resolve_c0, ModelParams};
use crate::scenarios::{
    default_polycrystal_blocks, ic_polycrystal, ic_random, ic_smooth, starter_step, MeshKind,
    MeshPlan, DEFAULT_STARTER_EXPONENT,
};
use crate::snapshot::write_snapshot;

/// Scalars summarizing a completed run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: u64,
    pub final_t: f64,
    pub final_e_original: f64,
    pub final_e_modified_discrete: f64,
    pub final_r: f64,
    pub min_tau: f64,
    pub max_tau: f64,
    pub max_ratio: f64,
    pub max_mass_drift: f64,
    pub min_denominator: f64,
    pub r_sign_warnings: u64,
    pub c0: f64,
    pub wall_seconds: f64,
}

impl RunSummary {
    /// Single structured-text record, `key=value` pairs on one line.
    pub fn to_record(&self) -> String {
        format!(
            "summary steps={} final_t={:.16e} E_original={:.16e} E_modified_discrete={:.16e} \
             r={:.16e} min_tau={:.16e} max_tau={:.16e} max_ratio={:.16e} max_mass_drift={:.3e} \
             min_denominator={:.16e} r_warnings={} C0={:.16e} wall_s={:.3}",
            self.steps,
            self.final_t,
            self.final_e_original,
            self.final_e_modified_discrete,
            self.final_r,
            self.min_tau,
            self.max_tau,
            self.max_ratio,
            self.max_mass_drift,
            self.min_denominator,
            self.r_sign_warnings,
            self.c0,
            self.wall_seconds
        )
    }
}

/// Everything a run produces in memory.
pub struct RunOutput {
    pub summary: RunSummary,
    pub records: Vec<EnergyRecord>,
    pub final_field: Field,
}

/// Builds the initial condition of a scenario.
pub fn initial_field(config: &RunConfig) -> Result<Field> {
    let grid = GridSpec::new(config.m, config.length)?;
    match &config.scenario {
        Scenario::Smooth => Ok(ic_smooth(grid)),
        Scenario::Random { mean, amplitude } => ic_random(grid, *mean, *amplitude, config.seed),
        Scenario::Polycrystal => ic_polycrystal(grid, &default_polycrystal_blocks(config.length)),
    }
}

/// Mesh plan implied by the config.
pub fn mesh_plan(config: &RunConfig) -> Result<MeshPlan> {
    let starter = if config.starter {
        Some(DEFAULT_STARTER_EXPONENT)
    } else {
        None
    };
    Ok(match &config.mesh {
        MeshSpec::Uniform { tau } => {
            let mut plan = MeshPlan::uniform(*tau, config.t_end);
            plan.starter_exponent = starter;
            plan
        }
        MeshSpec::Perturbed { tau, fraction } => {
            // validate the fraction eagerly for a config-stage error
            crate::scenarios::mesh_random_perturbed(*tau, config.t_end, *fraction, config.seed)?;
            MeshPlan::random_perturbed(*tau, config.t_end, *fraction, config.seed)
        }
        MeshSpec::Adaptive { .. } => {
            let params = resolve_adaptive(&config.mesh, config.sigma)?.expect("adaptive spec");
            let mut plan = MeshPlan::adaptive(params, config.t_end);
            plan.starter_exponent = starter;
            plan
        }
    })
}

/// Resolves the model constants against the plan and initial field.
pub fn resolve_model(config: &RunConfig, plan: &MeshPlan, phi0: &Field) -> Result<ModelParams> {
    let (c0, warning) = resolve_c0(
        config.c0,
        plan.reference_tau(),
        phi0,
        config.beta,
        config.epsilon,
        config.s,
    )?;
    if let Some(msg) = warning {
        eprintln!("warning: {msg}");
    }
    ModelParams::new(config.beta, config.epsilon, config.s, c0)
}

struct RecordLog {
    sigma: f64,
    records: Vec<EnergyRecord>,
    /// Row waiting for the next committed ratio: (record, hm1_sq / tau_n).
    pending: Option<(EnergyRecord, f64)>,
    last_gamma: f64,
}

impl RecordLog {
    fn new(sigma: f64) -> Self {
        Self {
            sigma,
            records: Vec::new(),
            pending: None,
            last_gamma: 1.0,
        }
    }

    /// Finalizes the pending row with the ratio of the step being committed.
    fn commit_ratio(&mut self, gamma_next: f64) {
        if let Some((mut rec, hm1_over_tau)) = self.pending.take() {
            if rec.step > 0 && gamma_next > 0.0 {
                rec.gamma = gamma_next;
                rec.e_modified_discrete += stability_g(gamma_next, self.sigma) * hm1_over_tau;
            }
            self.records.push(rec);
        }
        if gamma_next > 0.0 {
            self.last_gamma = gamma_next;
        }
    }

    fn push_pending(&mut self, rec: EnergyRecord, hm1_over_tau: f64) {
        debug_assert!(self.pending.is_none());
        self.pending = Some((rec, hm1_over_tau));
    }

    /// Final row: no further step exists, so the extra-term ratio reuses the
    /// last realized one (the decay chain stays valid for any admissible
    /// ratio).
    fn finish(mut self) -> Vec<EnergyRecord> {
        let gamma = self.last_gamma;
        self.commit_ratio(gamma);
        self.records
    }
}

struct SnapshotWriter<'a> {
    dir: Option<&'a Path>,
    /// Requested times, descending, so the next one pops from the back.
    remaining: Vec<f64>,
    written: Vec<(f64, f64, PathBuf)>,
}

impl<'a> SnapshotWriter<'a> {
    fn new(dir: Option<&'a Path>, mut times: Vec<f64>) -> Self {
        times.sort_by(f64::total_cmp);
        times.reverse();
        Self {
            dir,
            remaining: times,
            written: Vec::new(),
        }
    }

    /// Writes every requested time now reached; snapshots land on the first
    /// step time at or after the request.
    fn poll(&mut self, field: &Field, t: f64) -> Result<()> {
        while let Some(&next) = self.remaining.last() {
            if t < next - 1e-12 {
                break;
            }
            self.remaining.pop();
            if let Some(dir) = self.dir {
                let stem = dir.join(format!("snap_{:03}", self.written.len()));
                write_snapshot(&stem, field, t)?;
                self.written.push((next, t, stem));
            } else {
                self.written.push((next, t, PathBuf::new()));
            }
        }
        Ok(())
    }
}

/// How the marching loop picks its step sizes.
enum StepSource {
    Prescribed(Vec<f64>),
    Adaptive {
        params: crate::adaptive::AdaptiveParams,
        exponent: f64,
    },
}

struct Execution<'a> {
    phi0: Field,
    params: ModelParams,
    sigma: f64,
    dealias: bool,
    t_end: f64,
    source: StepSource,
    adapt_energy: AdaptEnergy,
    snapshot_times: Vec<f64>,
    out_dir: Option<&'a Path>,
}

fn execute(exec: Execution<'_>) -> Result<RunOutput> {
    let started = Instant::now();
    if let Some(dir) = exec.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mass0 = exec.phi0.mean();
    let mut stepper = Stepper::new(exec.phi0, exec.params, exec.sigma, exec.dealias)?;
    let mut log = RecordLog::new(exec.sigma);
    let mut snapshots = SnapshotWriter::new(exec.out_dir, exec.snapshot_times);
    snapshots.poll(stepper.phi(), 0.0)?;

    let mut min_tau = f64::INFINITY;
    let mut max_tau: f64 = 0.0;
    let mut max_ratio: f64 = 0.0;
    let mut max_mass_drift: f64 = 0.0;
    let mut min_denominator = f64::INFINITY;

    let report0 = stepper.energy_report();
    log.push_pending(
        EnergyRecord {
            step: 0,
            t: 0.0,
            tau: 0.0,
            gamma: 0.0,
            e_original: report0.e_original,
            e_modified_discrete: report0.e_modified,
            r: stepper.r(),
            r_ratio: 1.0,
            mass: mass0,
        },
        0.0,
    );

    loop {
        let tau = match &exec.source {
            StepSource::Prescribed(times) => {
                let idx = stepper.step_index() as usize;
                if idx + 1 >= times.len() {
                    break;
                }
                times[idx + 1] - times[idx]
            }
            StepSource::Adaptive {
                params: ada,
                exponent,
            } => {
                if stepper.t() >= exec.t_end * (1.0 - 1e-12) {
                    break;
                }
                let mut tau = if stepper.step_index() == 0 {
                    ada.tau_min.min(starter_step(ada.tau_max, *exponent))
                } else if log.records.len() < 2 {
                    ada.tau_min
                } else {
                    // backward difference over the newest consistent pair:
                    // the original energy is known for the pending row, the
                    // discrete modified energy only for finalized rows
                    let rate = match exec.adapt_energy {
                        AdaptEnergy::Original => {
                            let (newer_t, newer_e) = log
                                .pending
                                .as_ref()
                                .map(|(r, _)| (r.t, r.e_original))
                                .expect("pending row exists after a step");
                            let older = &log.records[log.records.len() - 1];
                            energy_rate((older.t, older.e_original), (newer_t, newer_e))?
                        }
                        AdaptEnergy::Modified => {
                            let older = &log.records[log.records.len() - 2];
                            let newer = &log.records[log.records.len() - 1];
                            energy_rate(
                                (older.t, older.e_modified_discrete),
                                (newer.t, newer.e_modified_discrete),
                            )?
                        }
                    };
                    next_step_size(rate.abs(), stepper.tau_prev(), ada)
                };
                // land exactly on T
                tau = tau.min(exec.t_end - stepper.t());
                if exec.t_end - stepper.t() - tau < 1e-12 * exec.t_end {
                    tau = exec.t_end - stepper.t();
                }
                tau
            }
        };

        if stepper.step_index() == 0 {
            if let Some((rec, _)) = log.pending.as_mut() {
                rec.tau = tau;
            }
            log.commit_ratio(0.0);
        } else {
            log.commit_ratio(tau / stepper.tau_prev());
        }

        let diag = match stepper.advance(tau) {
            Ok(diag) => *diag,
            Err(source) => {
                // dump the last good state next to the other outputs so the
                // failure can be replayed
                let dump = match exec.out_dir {
                    Some(dir) => {
                        let stem = dir.join("abort_state");
                        write_snapshot(&stem, stepper.phi(), stepper.t())?;
                        stem.display().to_string()
                    }
                    None => String::from("none"),
                };
                return Err(PfcError::Aborted {
                    step: stepper.step_index() + 1,
                    dump,
                    source: Box::new(source),
                });
            }
        };
        let report = stepper.energy_report();
        min_tau = min_tau.min(tau);
        max_tau = max_tau.max(tau);
        max_ratio = max_ratio.max(diag.gamma);
        min_denominator = min_denominator.min(diag.denominator);
        let mass = stepper.phi().mean();
        max_mass_drift = max_mass_drift.max((mass - mass0).abs());
        log.push_pending(
            EnergyRecord {
                step: stepper.step_index(),
                t: stepper.t(),
                tau,
                gamma: 0.0,
                e_original: report.e_original,
                e_modified_discrete: report.e_modified,
                r: stepper.r(),
                r_ratio: diag.r_ratio,
                mass,
            },
            report.hminus1_increment_sq / tau,
        );
        snapshots.poll(stepper.phi(), stepper.t())?;
    }

    let records = log.finish();
    let report = stepper.energy_report();
    let summary = RunSummary {
        steps: stepper.step_index(),
        final_t: stepper.t(),
        final_e_original: report.e_original,
        final_e_modified_discrete: records
            .last()
            .map_or(report.e_modified, |r| r.e_modified_discrete),
        final_r: stepper.r(),
        min_tau,
        max_tau,
        max_ratio,
        max_mass_drift,
        min_denominator,
        r_sign_warnings: stepper.r_sign_warnings(),
        c0: stepper.params().c0,
        wall_seconds: started.elapsed().as_secs_f64(),
    };

    if let Some(dir) = exec.out_dir {
        std::fs::write(dir.join("energy.csv"), format_energy_csv(&records))?;
        let mut summary_text = summary.to_record();
        summary_text.push('\n');
        for (requested, actual, stem) in &snapshots.written {
            summary_text.push_str(&format!(
                "snapshot requested_t={requested:.6e} actual_t={actual:.6e} stem={}\n",
                stem.display()
            ));
        }
        std::fs::write(dir.join("summary.txt"), summary_text)?;
    }

    Ok(RunOutput {
        summary,
        records,
        final_field: stepper.phi().clone(),
    })
}

/// Executes a configured run. When `out_dir` is given, writes `energy.csv`,
/// the requested snapshots, and `summary.txt` there.
pub fn run(config: &RunConfig, out_dir: Option<&Path>) -> Result<RunOutput> {
    let phi0 = initial_field(config)?;
    let plan = mesh_plan(config)?;
    let params = resolve_model(config, &plan, &phi0)?;
    let source = match plan.prescribed_times() {
        Some(times) => StepSource::Prescribed(times),
        None => {
            let MeshKind::Adaptive(ada) = plan.kind else {
                unreachable!()
            };
            StepSource::Adaptive {
                params: ada,
                exponent: plan.starter_exponent.unwrap_or(DEFAULT_STARTER_EXPONENT),
            }
        }
    };
    execute(Execution {
        phi0,
        params,
        sigma: config.sigma,
        dealias: config.dealias,
        t_end: config.t_end,
        source,
        adapt_energy: config.adapt_energy,
        snapshot_times: config.snapshot_times.clone(),
        out_dir,
    })
}

/// Runs a config on an explicitly prescribed mesh (the mesh's first interval
/// is the starter step).
pub fn run_explicit(config: &RunConfig, times: Vec<f64>) -> Result<RunOutput> {
    let phi0 = initial_field(config)?;
    let plan = MeshPlan::explicit(times)?;
    let params = resolve_model(config, &plan, &phi0)?;
    let times = plan.prescribed_times().expect("explicit plan");
    execute(Execution {
        phi0,
        params,
        sigma: config.sigma,
        dealias: config.dealias,
        t_end: *times.last().unwrap(),
        source: StepSource::Prescribed(times),
        adapt_energy: config.adapt_energy,
        snapshot_times: Vec::new(),
        out_dir: None,
    })
}

/// One row of a convergence study.
#[derive(Debug, Clone)]
pub struct StudyRow {
    /// Step count for temporal studies, grid size for spatial studies.
    pub label: usize,
    pub tau_max: f64,
    pub max_gamma: f64,
    pub error: f64,
    pub order: Option<f64>,
}

pub struct StudyTable {
    pub rows: Vec<StudyRow>,
}

impl StudyTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,tau_max,max_gamma,error,order\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{}\n",
                row.label,
                row.tau_max,
                row.max_gamma,
                row.error,
                row.order.map_or(String::from("-"), |o| format!("{o:.4}")),
            ));
        }
        out
    }
}

fn with_mesh(config: &RunConfig, mesh: MeshSpec) -> RunConfig {
    RunConfig {
        mesh,
        ..config.clone()
    }
}

/// Applies the study's per-run `C0 = scale / tau_max` override, if any.
fn with_study_c0(config: &RunConfig, tau_max: f64) -> RunConfig {
    match config.study.c0_scale {
        None => config.clone(),
        Some(scale) => RunConfig {
            c0: crate::model::C0Policy::Fixed(scale / tau_max),
            ..config.clone()
        },
    }
}

/// Temporal convergence study: reference run at `study.reference_tau`, then
/// one run per requested resolution; errors are final-time max-norm
/// differences against the reference on the same grid.
pub fn study_time(config: &RunConfig, out_dir: Option<&Path>) -> Result<StudyTable> {
    let reference_tau = config.study.reference_tau;
    let ref_config = with_mesh(
        &with_study_c0(config, reference_tau),
        MeshSpec::Uniform { tau: reference_tau },
    );
    let reference = run(&ref_config, None)?.final_field;

    let mut entries: Vec<(usize, f64, f64, f64)> = Vec::new();
    if config.study.perturbed {
        for (i, &steps) in config.study.step_counts.iter().enumerate() {
            if steps < 2 {
                return Err(PfcError::InvalidParameter("step count must be >= 2".into()));
            }
            let tau = config.t_end / steps as f64;
            if reference_tau >= tau {
                return Err(PfcError::InvalidParameter(format!(
                    "reference tau {reference_tau} must be smaller than studied tau {tau}"
                )));
            }
            let mesh = crate::scenarios::mesh_random_perturbed(
                tau,
                config.t_end,
                0.4,
                config.seed + i as u64,
            )?;
            let tau_max = mesh.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
            let max_gamma = mesh
                .windows(3)
                .map(|w| (w[2] - w[1]) / (w[1] - w[0]))
                .fold(0.0f64, f64::max);
            let out = run_explicit(&with_study_c0(config, tau_max), mesh)?;
            let err = linf_error(&out.final_field, &reference)?;
            entries.push((steps, tau_max, max_gamma, err));
        }
    } else {
        for &tau in &config.study.taus {
            if reference_tau >= tau {
                return Err(PfcError::InvalidParameter(format!(
                    "reference tau {reference_tau} must be smaller than studied tau {tau}"
                )));
            }
            let out = run(
                &with_mesh(&with_study_c0(config, tau), MeshSpec::Uniform { tau }),
                None,
            )?;
            let err = linf_error(&out.final_field, &reference)?;
            let steps = (config.t_end / tau).round() as usize;
            entries.push((steps, tau, out.summary.max_ratio, err));
        }
    }

    let pairs: Vec<(f64, f64)> = entries.iter().map(|e| (e.1, e.3)).collect();
    let orders = convergence_order(&pairs)?;
    let rows = entries
        .iter()
        .enumerate()
        .map(|(i, &(label, tau_max, max_gamma, error))| StudyRow {
            label,
            tau_max,
            max_gamma,
            error,
            order: if i == 0 { None } else { Some(orders[i - 1]) },
        })
        .collect();
    let table = StudyTable { rows };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("study_time.csv"), table.to_csv())?;
    }
    Ok(table)
}

/// Spatial accuracy study at fixed step size: each grid in `study.ms` is
/// compared against the `study.reference_m` run by sampling the reference at
/// the coarse grid's points.
pub fn study_space(config: &RunConfig, out_dir: Option<&Path>) -> Result<StudyTable> {
    let MeshSpec::Uniform { tau } = config.mesh else {
        return Err(PfcError::InvalidParameter(
            "study-space expects a uniform mesh (fixed small tau)".into(),
        ));
    };
    let ref_m = config.study.reference_m;
    let mut ref_config = config.clone();
    ref_config.m = ref_m;
    let reference = run(&ref_config, None)?.final_field;

    let mut rows = Vec::new();
    for &m in &config.study.ms {
        if ref_m % m != 0 {
            return Err(PfcError::InvalidParameter(format!(
                "reference grid {ref_m} must be a multiple of studied grid {m}"
            )));
        }
        let mut cfg = config.clone();
        cfg.m = m;
        let out = run(&cfg, None)?;
        let stride = ref_m / m;
        let coarse = out.final_field;
        let mut err: f64 = 0.0;
        for iy in 0..m {
            for ix in 0..m {
                let diff = coarse.at(ix, iy) - reference.at(ix * stride, iy * stride);
                err = err.max(diff.abs());
            }
        }
        rows.push(StudyRow {
            label: m,
            tau_max: tau,
            max_gamma: out.summary.max_ratio,
            error: err,
            order: None,
        });
    }
    let table = StudyTable { rows };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("study_space.csv"), table.to_csv())?;
    }
    Ok(table)
}
