//! The canned experiments E1–E5 and their machine-readable outputs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentId, RunConfig};
use crate::diagnostics::{
    classify_mass_trace, dyadic_profile, exterior_strichartz, mass_decoupling, monotonicity_violation, write_dyadic_csv,
    DyadicNorm, MassTrace, Trajectory,
};
use crate::error::Result;
use crate::evolve::{evolve_fixed, observables, virial_check, Observables, SimState, VirialModel};
use crate::exact_solutions::SolutionFamily;
use crate::ground_state::{solve_ground_state, GroundState};
use crate::radial::{RadialField, RadialGrid};
use crate::surgery::{run_semi_strichartz, write_events_csv, ContinuationRun, RunSummary, SurgeryEvent};

/// One pass/fail verdict, tied to an acceptance criterion by number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub value: f64,
    pub requirement: String,
    pub passed: bool,
}

impl Check {
    fn new(criterion: u8, name: &str, value: f64, requirement: &str, passed: bool) -> Self {
        Check { criterion, name: name.into(), value, requirement: requirement.into(), passed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentId,
    pub config_hash: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
    pub runs: Vec<RunSummary>,
}

/// Everything an experiment produces, before it is written out.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    /// Named diagnostic traces, one CSV each.
    pub traces: Vec<(String, MassTrace)>,
    pub events: Option<Vec<SurgeryEvent>>,
    /// Further CSV files, by name.
    pub tables: Vec<(String, String)>,
}

/// Largest relative violation of monotonicity accepted in a mass trace.
pub const MONOTONE_TOL: f64 = 1e-10;

pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let hash = cfg.hash()?;
    let mut out = match cfg.experiment {
        ExperimentId::E1 => e1(cfg)?,
        ExperimentId::E2 => e2(cfg)?,
        ExperimentId::E3 => e3(cfg)?,
        ExperimentId::E4 => e4(cfg)?,
        ExperimentId::E5 => e5(cfg)?,
    };
    out.report.config_hash = hash.clone();
    for run in &mut out.report.runs {
        run.config_hash = hash.clone();
    }
    out.report.passed = out.report.checks.iter().all(|c| c.passed);
    Ok(out)
}

fn report(cfg: &RunConfig, checks: Vec<Check>, metrics: BTreeMap<String, f64>, runs: Vec<RunSummary>) -> ExperimentReport {
    ExperimentReport { experiment: cfg.experiment, config_hash: String::new(), passed: false, checks, metrics, runs }
}

fn grid(cfg: &RunConfig) -> Result<Arc<RadialGrid>> {
    RadialGrid::new(cfg.d, cfg.n, cfg.r_max)
}

fn ground(cfg: &RunConfig, grid: &Arc<RadialGrid>) -> Result<GroundState> {
    solve_ground_state(grid, cfg.gs_tol)
}

/// Largest relative change of the mass between consecutive trace samples
/// that do not straddle an event.
fn drift_between_events(trace: &MassTrace, events: &[SurgeryEvent]) -> f64 {
    let scale = trace.masses.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let straddles = |a: f64, b: f64| events.iter().any(|e| e.t_event >= a.min(b) && e.t_event <= a.max(b));
    (1..trace.len())
        .filter(|&k| !straddles(trace.times[k - 1], trace.times[k]))
        .map(|k| (trace.masses[k] - trace.masses[k - 1]).abs() / scale)
        .fold(0.0, f64::max)
}

fn monotone_checks(run: &ContinuationRun, checks: &mut Vec<Check>) {
    let violation = monotonicity_violation(&run.mass_trace, run.t0);
    checks.push(Check::new(5, "mass_monotone_violation", violation, "< 1e-10 relative", violation < MONOTONE_TOL));
    let drift = drift_between_events(&run.mass_trace, &run.events);
    checks.push(Check::new(5, "mass_drift_between_events", drift, "< 1e-10 relative", drift < MONOTONE_TOL));
}

/// Pseudoconformal blowup data continued through the singularity.
fn e1(cfg: &RunConfig) -> Result<ExperimentOutput> {
    let g = grid(cfg)?;
    let gs = ground(cfg, &g)?;
    let u0 = SolutionFamily::pseudoconformal(&gs).sample(cfg.t0, &g)?;
    let run = run_semi_strichartz(u0, cfg.t0, cfg.t_end, &cfg.surgery())?;
    let mq = gs.mass;
    let mut checks = Vec::new();
    let n_events = run.events.len() as f64;
    checks.push(Check::new(4, "event_count", n_events, "== 1", run.events.len() == 1));
    let jump = run.events.first().map_or(0.0, |e| e.jump / mq);
    checks.push(Check::new(4, "jump_over_ground_mass", jump, "in [0.95, 1.05]", (0.95..=1.05).contains(&jump)));
    let after = run.events.first().map_or(f64::NAN, |e| e.mass_after / mq);
    checks.push(Check::new(4, "post_surgery_mass_over_ground_mass", after, "< 0.05", after < 0.05));
    let final_ratio = run.final_mass() / mq;
    checks.push(Check::new(4, "final_mass_over_ground_mass", final_ratio, "< 0.05", final_ratio < 0.05));
    monotone_checks(&run, &mut checks);
    let mut metrics = BTreeMap::new();
    metrics.insert("ground_state_mass".into(), mq);
    metrics.insert("ground_state_residual".into(), gs.residual);
    if let Some(e) = run.events.first() {
        metrics.insert("t_event".into(), e.t_event);
        metrics.insert("excision_radius".into(), e.excision_radius);
    }
    Ok(ExperimentOutput {
        report: report(cfg, checks, metrics, vec![run.summary("")]),
        traces: vec![("trace".into(), run.mass_trace.clone())],
        events: Some(run.events.clone()),
        tables: Vec::new(),
    })
}

/// Scaled ground state below the threshold mass, run for a long time.
fn e2(cfg: &RunConfig) -> Result<ExperimentOutput> {
    let g = grid(cfg)?;
    let gs = ground(cfg, &g)?;
    let u0 = gs.profile.scale(Complex64::new(cfg.mass_ratio.sqrt(), 0.0));
    let run = run_semi_strichartz(u0, cfg.t0, cfg.t_end, &cfg.surgery())?;
    let mut checks = Vec::new();
    checks.push(Check::new(7, "event_count", run.events.len() as f64, "== 0", run.events.is_empty()));
    let grads = &run.mass_trace.grad_norms;
    let growth = grads.iter().copied().fold(0.0, f64::max) / grads[0];
    checks.push(Check::new(7, "max_grad_norm_over_initial", growth, "<= 2", growth <= 2.0));
    monotone_checks(&run, &mut checks);
    let mut metrics = BTreeMap::new();
    metrics.insert("ground_state_mass".into(), gs.mass);
    metrics.insert("initial_mass_over_ground_mass".into(), run.initial_mass() / gs.mass);
    metrics.insert("final_grad_norm".into(), *grads.last().unwrap());
    Ok(ExperimentOutput {
        report: report(cfg, checks, metrics, vec![run.summary("")]),
        traces: vec![("trace".into(), run.mass_trace.clone())],
        events: Some(run.events.clone()),
        tables: Vec::new(),
    })
}

/// Number of time samples of each soliton trajectory in E3.
const E3_SAMPLES: usize = 9;

/// Exterior norms of rescaled solitons over `[t0, t0 + 1]` against their radius.
fn e3(cfg: &RunConfig) -> Result<ExperimentOutput> {
    let g = grid(cfg)?;
    let gs = ground(cfg, &g)?;
    let interval = (cfg.t0, cfg.t0 + 1.0);
    let mut rows = String::from("radius,exterior_norm,scaled\n");
    let mut scaled = Vec::new();
    let mut profile: Vec<DyadicNorm> = Vec::new();
    for (i, &radius) in cfg.radii.iter().enumerate() {
        let family = SolutionFamily::rescaled_soliton(&gs, radius)?;
        let mut traj = Trajectory::new();
        for k in 0..E3_SAMPLES {
            let t = interval.0 + k as f64 / (E3_SAMPLES - 1) as f64;
            traj.push(t, family.sample(t, &g)?)?;
        }
        let norm = exterior_strichartz(&traj, interval, radius)?;
        rows.push_str(&format!("{radius},{norm},{}\n", radius * norm));
        scaled.push(radius * norm);
        if i == 0 {
            profile = dyadic_profile(&traj, interval, cfg.k_min..=cfg.k_max)?;
        }
    }
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let spread = hi / lo - 1.0;
    let mut checks = vec![Check::new(6, "scaled_exterior_norm_spread", spread, "<= 0.10", spread <= 0.10)];
    let increases = profile.windows(2).filter(|w| w[1].value > w[0].value).count();
    checks.push(Check::new(6, "dyadic_profile_increases", increases as f64, "== 0", increases == 0));
    let mut metrics = BTreeMap::new();
    for (r, v) in cfg.radii.iter().zip(&scaled) {
        metrics.insert(format!("scaled_exterior_norm_r{r}"), *v);
    }
    let mut dyadic = Vec::new();
    write_dyadic_csv(&profile, &mut dyadic)?;
    Ok(ExperimentOutput {
        report: report(cfg, checks, metrics, Vec::new()),
        traces: Vec::new(),
        events: None,
        tables: vec![("exterior".into(), rows), ("dyadic".into(), String::from_utf8(dyadic).expect("ascii"))],
    })
}

/// Spacing and fixed step of the early samples used for the virial check.
const VIRIAL_SPACING: f64 = 1e-3;
const VIRIAL_DT: f64 = 1e-4;

/// Chirped Gaussian with negative energy: virial identity and the blowup
/// time bound from the vanishing of the variance.
fn e4(cfg: &RunConfig) -> Result<ExperimentOutput> {
    let g = grid(cfg)?;
    let (a, beta) = (cfg.amplitude, cfg.chirp);
    let u0 = RadialField::from_fn(g.clone(), |r| Complex64::from_polar(a * (-0.5 * r * r).exp(), -beta * r * r))?;
    let evolve = cfg.evolve();
    let mut samples: Vec<(f64, Observables)> = vec![(cfg.t0, observables(&u0))];
    let mut s = SimState::new(u0.clone(), cfg.t0, VIRIAL_DT);
    let mut virial_csv = String::from("t,variance,energy\n");
    for k in 1..5 {
        s = evolve_fixed(s, cfg.t0 + k as f64 * VIRIAL_SPACING, VIRIAL_DT, &evolve)?;
        samples.push((s.t, observables(&s.u)));
    }
    for (t, o) in &samples {
        virial_csv.push_str(&format!("{t},{},{}\n", o.variance, o.energy));
    }
    let virial = virial_check(&samples, VirialModel::Focusing)?;
    let v: Vec<f64> = samples.iter().map(|s| s.1.variance).collect();
    let v0 = v[0];
    let dv0 = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * VIRIAL_SPACING);
    let energy = samples[0].1.energy;
    // positive root of V0 + V'(0) t + 8 E t² for E < 0
    let root = (-dv0 - (dv0 * dv0 - 32.0 * energy * v0).sqrt()) / (16.0 * energy);

    let mut checks = vec![Check::new(9, "initial_energy", energy, "< 0", energy < 0.0)];
    checks.push(Check::new(9, "virial_relative_deviation", virial.relative_deviation, "< 1e-2", virial.relative_deviation < 1e-2));
    let mut runs = Vec::new();
    let mut traces = Vec::new();
    let mut events = Vec::new();
    let mut metrics = BTreeMap::new();
    if energy < 0.0 && root.is_finite() {
        let t_end = cfg.t0 + 1.25 * root;
        let run = run_semi_strichartz(u0, cfg.t0, t_end, &cfg.surgery())?;
        let observed = run.events.first().map_or(f64::INFINITY, |e| e.t_event - cfg.t0);
        let ratio = observed / root;
        checks.push(Check::new(9, "trigger_over_virial_root", ratio, "in [0.8, 1.2]", (0.8..=1.2).contains(&ratio)));
        monotone_checks(&run, &mut checks);
        metrics.insert("observed_trigger_time".into(), observed);
        runs.push(run.summary(""));
        traces.push(("trace".into(), run.mass_trace.clone()));
        events = run.events;
    }
    metrics.insert("energy".into(), energy);
    metrics.insert("variance".into(), v0);
    metrics.insert("variance_rate".into(), dv0);
    metrics.insert("virial_root".into(), root);
    metrics.insert("virial_second_derivative".into(), virial.second_derivative);
    Ok(ExperimentOutput {
        report: report(cfg, checks, metrics, runs),
        traces,
        events: Some(events),
        tables: vec![("virial".into(), virial_csv)],
    })
}

/// Mass traces of the solution that is pseudoconformal on one side of the
/// blowup time and zero on the other, and the cosine rule on random pairs.
fn e5(cfg: &RunConfig) -> Result<ExperimentOutput> {
    let g = grid(cfg)?;
    let gs = ground(cfg, &g)?;
    let family = SolutionFamily::pseudoconformal(&gs);
    let mq = gs.mass;
    // the sampler needs the core resolved, which bounds |t| from below
    let t_min = (8.0 * g.spacing() / family.half_max_radius(1.0) * 4.0).ceil() / 4.0;
    let zero = RadialField::zeros(g.clone());
    let mut checks = Vec::new();
    let mut traces = Vec::new();
    let mut metrics = BTreeMap::new();
    for (name, sign) in [("forward", 1.0), ("backward", -1.0)] {
        // forward: zero for t ≤ 0 and pseudoconformal after; backward mirrors it
        let mut trace = MassTrace::new();
        for k in -20..=20 {
            let t = k as f64 * 0.05;
            let u = if t * sign > 0.0 {
                if t.abs() < t_min {
                    continue;
                }
                family.sample(t, &g)?
            } else {
                zero.clone()
            };
            trace.push(t, &observables(&u), f64::NAN)?;
        }
        let t0 = sign * cfg.t0.abs();
        let rep = classify_mass_trace(&trace, t0, 0.01 * mq)?;
        let size = rep.jumps.first().map_or(0.0, |j| j.size / mq);
        checks.push(Check::new(10, &format!("{name}_jump_count"), rep.jumps.len() as f64, "== 1", rep.jumps.len() == 1));
        checks.push(Check::new(10, &format!("{name}_jump_over_ground_mass"), size, "in [0.99, 1.01]", (0.99..=1.01).contains(&size)));
        let ok = rep.one_sided_continuous && !rep.continuous_mass;
        checks.push(Check::new(10, &format!("{name}_one_sided_not_continuous"), ok as u8 as f64, "== 1", ok));
        metrics.insert(format!("{name}_sample_spacing"), rep.max_sample_spacing);
        traces.push((format!("trace_{name}"), trace));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(u64::from(cfg.seed));
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.pairs {
        let mut random = || -> Result<RadialField> {
            let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
            let values = (0..g.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale).collect();
            RadialField::new(g.clone(), values)
        };
        let (u, v) = (random()?, random()?);
        let lhs = u.sub(&v)?.mass();
        let rhs = u.mass() + v.mass() - mass_decoupling(&u, &v)?;
        worst = worst.max((lhs - rhs).abs() / (u.mass() + v.mass()));
    }
    checks.push(Check::new(10, "cosine_rule_relative_error", worst, "< 1e-12", worst < 1e-12));
    metrics.insert("ground_state_mass".into(), mq);
    Ok(ExperimentOutput { report: report(cfg, checks, metrics, Vec::new()), traces, events: None, tables: Vec::new() })
}

/// Write the outputs into `dir` (created if needed) and return the paths.
/// Identical outputs give identical bytes.
pub fn emit_outputs(out: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut create = |name: &str| -> Result<(std::io::BufWriter<std::fs::File>, PathBuf)> {
        let path = dir.join(name);
        written.push(path.clone());
        Ok((std::io::BufWriter::new(std::fs::File::create(&path)?), path))
    };
    for (name, trace) in &out.traces {
        let (mut w, _) = create(&format!("{name}.csv"))?;
        trace.write_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(events) = &out.events {
        let (mut w, _) = create("events.csv")?;
        write_events_csv(events, &mut w)?;
        w.flush()?;
    }
    for (name, body) in &out.tables {
        let (mut w, _) = create(&format!("{name}.csv"))?;
        w.write_all(body.as_bytes())?;
        w.flush()?;
    }
    let (mut w, _) = create("summary.json")?;
    serde_json::to_writer_pretty(&mut w, &out.report)?;
    writeln!(w)?;
    w.flush()?;
    Ok(written)
}
