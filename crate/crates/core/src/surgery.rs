//! Continuation through blowup: watch for Strichartz-class breakdown, cut out
//! the concentrating core, keep evolving, and log the mass that was removed.
//!
//! Core excision stands in for the weak limit at the blowup time. For
//! self-similar concentration the mass escaping to zero scale is exactly the
//! core mass, and the dyadic plateau test is what certifies the separation of
//! scales; convergence of the procedure under refinement is not assumed.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::MassTrace;
use crate::error::{AliasRegion, BlowupReason, Error, Result};
use crate::evolve::{core_radius, next_step_size, observables, step, EvolveConfig, Observables, SimState};
use crate::radial::{endpoint_exponent, gradient_norm_sqr, smooth_step, RadialField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurgeryConfig {
    /// Length `h` of the trailing window of the Strichartz-type norm.
    pub window: f64,
    /// Largest admissible `(Σ dt ‖u‖²_{L^{2d/(d-2)}})^{1/2}` over the window.
    pub s_max: f64,
    /// Largest admissible `‖∇u‖₂`; also the gradient cap of the stepper.
    pub g_max: f64,
    /// Relative exterior-mass change that counts as a plateau.
    pub plateau_tol: f64,
    /// Fewest grid cells the 50% mass radius may span.
    pub min_core_cells: f64,
    pub max_events: usize,
    /// Record diagnostics every this many steps (events and endpoints are
    /// always recorded).
    pub trace_every: usize,
    /// Keep a field checkpoint every this many steps; 0 keeps only the
    /// endpoints.
    pub checkpoint_every: usize,
    pub evolve: EvolveConfig,
}

impl Default for SurgeryConfig {
    fn default() -> Self {
        Self {
            window: 0.05,
            s_max: 50.0,
            g_max: 1e4,
            plateau_tol: 1e-3,
            min_core_cells: 8.0,
            max_events: 16,
            trace_every: 10,
            checkpoint_every: 0,
            evolve: EvolveConfig::default(),
        }
    }
}

impl SurgeryConfig {
    pub fn validate(&self) -> Result<()> {
        self.evolve.validate()?;
        let positive = [self.window, self.s_max, self.g_max, self.plateau_tol, self.min_core_cells];
        if positive.iter().any(|x| !(*x > 0.0 && x.is_finite())) || self.plateau_tol >= 1.0 || self.trace_every == 0 {
            return Err(Error::Config(format!("invalid surgery parameters {self:?}")));
        }
        Ok(())
    }

    fn stepper(&self) -> EvolveConfig {
        EvolveConfig { grad_cap: self.g_max, ..self.evolve }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    WindowNorm,
    CoreWidth,
    GradCap,
}

impl Trigger {
    pub fn as_str(self) -> &'static str {
        match self {
            Trigger::WindowNorm => "window_norm",
            Trigger::CoreWidth => "core_width",
            Trigger::GradCap => "grad_cap",
        }
    }
}

impl std::fmt::Display for Trigger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurgeryEvent {
    pub t_event: f64,
    pub mass_before: f64,
    pub mass_after: f64,
    /// `mass_before − mass_after`
    pub jump: f64,
    /// Inner radius `ρ*` of the cutoff.
    pub excision_radius: f64,
    pub trigger: Trigger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeDirection {
    Forward,
    Backward,
}

#[derive(Debug, Clone)]
pub struct ContinuationRun {
    pub t0: f64,
    pub t_end: f64,
    pub direction: TimeDirection,
    /// In evolution order, first and last state included.
    pub checkpoints: Vec<SimState>,
    pub events: Vec<SurgeryEvent>,
    /// In increasing time whatever the direction.
    pub mass_trace: MassTrace,
    pub steps: u64,
}

impl ContinuationRun {
    pub fn final_state(&self) -> &SimState {
        self.checkpoints.last().expect("a run keeps its final state")
    }

    pub fn initial_mass(&self) -> f64 {
        self.checkpoints[0].u.mass()
    }

    pub fn final_mass(&self) -> f64 {
        self.final_state().u.mass()
    }

    /// JSON-ready summary; `config_hash` identifies the inputs.
    pub fn summary(&self, config_hash: &str) -> RunSummary {
        RunSummary {
            config_hash: config_hash.to_string(),
            t0: self.t0,
            t_end: self.t_end,
            direction: self.direction,
            steps: self.steps,
            initial_mass: self.initial_mass(),
            final_mass: self.final_mass(),
            events: self.events.clone(),
            final_state_digest: field_digest(&self.final_state().u),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub t0: f64,
    pub t_end: f64,
    pub direction: TimeDirection,
    pub steps: u64,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub events: Vec<SurgeryEvent>,
    pub final_state_digest: String,
}

/// SHA-256 of the little-endian bytes of the samples, hex encoded.
pub fn field_digest(u: &RadialField) -> String {
    let mut h = Sha256::new();
    for v in u.values() {
        h.update(v.re.to_le_bytes());
        h.update(v.im.to_le_bytes());
    }
    hex::encode(h.finalize())
}

pub const EVENTS_HEADER: &str = "t_event,mass_before,mass_after,jump,radius,trigger";

pub fn write_events_csv(events: &[SurgeryEvent], mut out: impl Write) -> Result<()> {
    writeln!(out, "{EVENTS_HEADER}")?;
    for e in events {
        writeln!(out, "{},{},{},{},{},{}", e.t_event, e.mass_before, e.mass_after, e.jump, e.excision_radius, e.trigger)?;
    }
    Ok(())
}

/// Trailing-window bookkeeping of `‖u(t)‖²_{L^{2d/(d-2)}}`.
#[derive(Debug, Clone, Default)]
struct WindowMonitor {
    samples: VecDeque<(f64, f64)>,
}

impl WindowMonitor {
    fn push(&mut self, t: f64, norm_sqr: f64, window: f64) {
        self.samples.push_back((t, norm_sqr));
        while self.samples.len() > 2 && (t - self.samples[1].0).abs() >= window {
            self.samples.pop_front();
        }
    }

    /// `(Σ |t_k − t_{k−1}| ‖u(t_k)‖²)^{1/2}`; zero with fewer than two samples.
    fn norm(&self) -> f64 {
        self.samples.iter().zip(self.samples.iter().skip(1)).map(|(a, b)| (b.0 - a.0).abs() * b.1).sum::<f64>().sqrt()
    }

    fn clear(&mut self) {
        self.samples.clear();
    }
}

fn window_norm_sqr_sample(u: &RadialField) -> f64 {
    let q = endpoint_exponent(u.grid().dim());
    u.lebesgue_norm(q).expect("endpoint exponent is admissible").powi(2)
}

fn core_cells(u: &RadialField) -> f64 {
    core_radius(u) / u.grid().spacing()
}

/// Core-width test on the zero field never fires.
fn core_too_narrow(u: &RadialField, cfg: &SurgeryConfig) -> bool {
    u.mass() > 0.0 && core_cells(u) < cfg.min_core_cells
}

/// Breakdown test on a run of recent states (in evolution order, at least
/// two): the windowed norm over the trailing `cfg.window` of time, then the
/// core width and the gradient norm of the latest state.
pub fn detect_breakdown(states: &[SimState], cfg: &SurgeryConfig) -> Result<Option<Trigger>> {
    if states.len() < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: states.len() });
    }
    let mut monitor = WindowMonitor::default();
    for s in states {
        monitor.push(s.t, window_norm_sqr_sample(&s.u), cfg.window);
    }
    let last = &states[states.len() - 1].u;
    Ok(if monitor.norm() > cfg.s_max {
        Some(Trigger::WindowNorm)
    } else if core_too_narrow(last, cfg) {
        Some(Trigger::CoreWidth)
    } else if gradient_norm_sqr(last).sqrt() > cfg.g_max {
        Some(Trigger::GradCap)
    } else {
        None
    })
}

/// Exterior mass plateau search over dyadic radii `ρ = 2^k`, starting at the
/// smallest one beyond the half-maximum radius of `|u|`.
pub fn plateau_radius(u: &RadialField, plateau_tol: f64) -> Result<f64> {
    let mass = u.mass();
    if mass == 0.0 {
        return Err(Error::NoTrigger);
    }
    let mut rho = 2f64.powi(half_max_radius(u).log2().ceil() as i32);
    let r_max = u.grid().r_max();
    while 2.0 * rho <= r_max {
        if (u.exterior_mass(rho) - u.exterior_mass(2.0 * rho)).abs() < plateau_tol * mass {
            return Ok(rho);
        }
        rho *= 2.0;
    }
    Err(Error::NoPlateau)
}

/// First radius beyond the maximum of `|u|` where it falls to half of it.
fn half_max_radius(u: &RadialField) -> f64 {
    let nodes = u.grid().nodes();
    let abs: Vec<f64> = u.values().iter().map(|v| v.norm()).collect();
    let (peak_at, peak) = abs.iter().copied().enumerate().fold((0, 0.0), |acc, (j, a)| if a > acc.1 { (j, a) } else { acc });
    (peak_at..abs.len()).find(|&j| abs[j] <= 0.5 * peak).map_or(u.grid().r_max(), |j| nodes[j])
}

/// Multiply `u` by a smooth radial cutoff vanishing on `r ≤ ρ*` and equal to
/// one on `r ≥ 2ρ*`, with `ρ*` the plateau radius.
pub fn excise_core(u: &RadialField, t: f64, trigger: Trigger, plateau_tol: f64) -> Result<(RadialField, SurgeryEvent)> {
    let rho = plateau_radius(u, plateau_tol)?;
    let after = u.multiply_by(|r| smooth_step((r - rho) / rho));
    let (mass_before, mass_after) = (u.mass(), after.mass());
    let event = SurgeryEvent {
        t_event: t,
        mass_before,
        mass_after,
        jump: (mass_before - mass_after).max(0.0),
        excision_radius: rho,
        trigger,
    };
    Ok((after, event))
}

/// Outcome of one attempted step from a safe state.
enum Probe {
    Safe(SimState),
    Tripped(Trigger),
}

struct Runner<'a> {
    cfg: &'a SurgeryConfig,
    stepper: EvolveConfig,
    monitor: WindowMonitor,
}

impl Runner<'_> {
    /// Step from `s` by `h` and test the result; the window monitor is only
    /// updated when `commit` is set and the step is safe.
    fn probe(&mut self, s: &SimState, h: f64, commit: bool) -> Result<Probe> {
        let mut trial = s.clone();
        trial.dt = h;
        let next = match step(&trial, &self.stepper) {
            Ok(next) => next,
            Err(Error::BlowupSuspected { reason: BlowupReason::GradCap { .. }, .. }) => return Ok(Probe::Tripped(Trigger::GradCap)),
            Err(Error::BlowupSuspected { reason: BlowupReason::HighFrequency { .. }, .. }) => {
                return Ok(Probe::Tripped(Trigger::CoreWidth))
            }
            Err(Error::Aliasing { region: AliasRegion::HighFrequency, .. }) => return Ok(Probe::Tripped(Trigger::CoreWidth)),
            Err(e) => return Err(e),
        };
        let mut monitor = self.monitor.clone();
        monitor.push(next.t, window_norm_sqr_sample(&next.u), self.cfg.window);
        if monitor.norm() > self.cfg.s_max {
            return Ok(Probe::Tripped(Trigger::WindowNorm));
        }
        if core_too_narrow(&next.u, self.cfg) {
            return Ok(Probe::Tripped(Trigger::CoreWidth));
        }
        if commit {
            self.monitor = monitor;
        }
        Ok(Probe::Safe(next))
    }

    /// Shrink the step from `safe` until the first tripping time is known to
    /// within `dt_min`. Returns the last safe state and the tripping time.
    fn localize(&mut self, mut safe: SimState, h: f64, mut trigger: Trigger) -> Result<(SimState, f64, Trigger)> {
        let mut t_trip = safe.t + h;
        while (t_trip - safe.t).abs() > self.stepper.dt_min {
            let half = 0.5 * (t_trip - safe.t);
            match self.probe(&safe, half, true)? {
                Probe::Safe(next) => safe = next,
                Probe::Tripped(tr) => {
                    t_trip = safe.t + half;
                    trigger = tr;
                }
            }
        }
        Ok((safe, t_trip, trigger))
    }
}

type Row = (f64, Observables, f64);

fn record(rows: &mut Vec<Row>, s: &SimState, window: f64) {
    rows.push((s.t, observables(&s.u), window));
}

/// Evolve `u0` from `t0` toward `t_end` (either direction), excising the
/// core whenever breakdown is detected. The event time is the first tripping
/// time, localised by bisection to within `dt_min`; the excision is applied to
/// the last safe state, which is then stepped to the event time.
pub fn run_semi_strichartz(u0: RadialField, t0: f64, t_end: f64, cfg: &SurgeryConfig) -> Result<ContinuationRun> {
    cfg.validate()?;
    if !(t0.is_finite() && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("time interval [{t0}, {t_end}]")));
    }
    if core_too_narrow(&u0, cfg) {
        return Err(Error::UnresolvedCore { cells: core_cells(&u0) });
    }
    let direction = if t_end >= t0 { TimeDirection::Forward } else { TimeDirection::Backward };
    let sign = if direction == TimeDirection::Forward { 1.0 } else { -1.0 };
    let mut runner = Runner { cfg, stepper: cfg.stepper(), monitor: WindowMonitor::default() };
    let mut rows = Vec::new();

    let mut s = SimState::new(u0, t0, 0.0);
    runner.monitor.push(t0, window_norm_sqr_sample(&s.u), cfg.window);
    record(&mut rows, &s, 0.0);
    let mut checkpoints = vec![s.clone()];
    let mut events = Vec::new();
    let mut steps = 0u64;
    let mut since_record = 0usize;

    while (t_end - s.t) * sign > 0.0 {
        let h = next_step_size(&s, t_end, &runner.stepper);
        match runner.probe(&s, h, true)? {
            Probe::Safe(mut next) => {
                if (t_end - next.t) * sign <= 0.0 {
                    next.t = t_end;
                }
                s = next;
                steps += 1;
                since_record += 1;
                if since_record >= cfg.trace_every {
                    record(&mut rows, &s, runner.monitor.norm());
                    since_record = 0;
                }
                if cfg.checkpoint_every > 0 && steps % cfg.checkpoint_every as u64 == 0 {
                    checkpoints.push(s.clone());
                }
            }
            Probe::Tripped(trigger) => {
                if events.len() >= cfg.max_events {
                    return Err(Error::MaxEvents(cfg.max_events));
                }
                let (safe, t_trip, trigger) = runner.localize(s, h, trigger)?;
                if rows.last().map(|r: &Row| r.0) != Some(safe.t) {
                    record(&mut rows, &safe, runner.monitor.norm());
                }
                let (cut, mut event) = excise_core(&safe.u, t_trip, trigger, cfg.plateau_tol)?;
                let mut rest = SimState { t: safe.t, u: cut, dt: t_trip - safe.t, step_count: safe.step_count };
                // The remainder can itself be steep; then it is left as is
                // for the sub-`dt_min` gap and the next step trips again.
                if rest.dt != 0.0 {
                    match step(&rest, &runner.stepper) {
                        Ok(next) => rest = next,
                        Err(Error::BlowupSuspected { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
                rest.t = t_trip;
                event.mass_after = rest.u.mass();
                event.jump = (event.mass_before - event.mass_after).max(0.0);
                events.push(event);
                runner.monitor.clear();
                runner.monitor.push(rest.t, window_norm_sqr_sample(&rest.u), cfg.window);
                record(&mut rows, &rest, 0.0);
                since_record = 0;
                steps += 1;
                s = rest;
            }
        }
    }
    if since_record > 0 {
        record(&mut rows, &s, runner.monitor.norm());
    }
    if steps > 0 {
        checkpoints.push(s);
    }
    Ok(ContinuationRun {
        t0,
        t_end,
        direction,
        checkpoints,
        events,
        mass_trace: MassTrace::from_evolution_order(rows)?,
        steps,
    })
}

#[cfg(test)]
mod tests;
