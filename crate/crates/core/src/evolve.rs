//! Strang-split time stepping of `i u_t + Δu = −|u|^{4/d} u` with an
//! amplitude-based step controller and the standard diagnostics.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{AliasRegion, BlowupReason, Error, Result};
use crate::ground_state::nonlinear_exponent;
use crate::radial::{
    alias_report, alias_report_from_coefficients, apply_free_phase, from_coefficients, gradient_norm_sqr, to_coefficients,
    RadialField,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub dt_min: f64,
    pub dt_max: f64,
    /// `c` in `dt = c / (1 + max|u|^{4/d})`.
    pub dt_safety: f64,
    /// Largest admissible `‖∇u‖₂`.
    pub grad_cap: f64,
    /// Off for the free Schrödinger flow.
    pub nonlinear: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self { dt_min: 1e-7, dt_max: 1e-3, dt_safety: 0.02, grad_cap: 1e6, nonlinear: true }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt_min > 0.0
            && self.dt_max >= self.dt_min
            && self.dt_max.is_finite()
            && self.dt_safety > 0.0
            && self.dt_safety.is_finite()
            && self.grad_cap > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid time stepping parameters {self:?}")))
        }
    }
}

/// State of a trajectory. `dt` is signed: negative steps run backward in time.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub u: RadialField,
    pub dt: f64,
    pub step_count: u64,
}

impl SimState {
    pub fn new(u: RadialField, t: f64, dt: f64) -> Self {
        Self { t, u, dt, step_count: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub mass: f64,
    pub energy: f64,
    /// `‖∇u‖₂`
    pub grad_norm: f64,
    /// `∫ |x|² |u|²`
    pub variance: f64,
    /// Radius enclosing half the mass.
    pub core_radius: f64,
}

/// `|u|^{4/d}` phase rotation over time `h`; exact because the nonlinear flow
/// conserves `|u|` pointwise.
fn nonlinear_phase(values: &mut [Complex64], p: f64, h: f64) {
    for v in values {
        let a = v.norm();
        if a > 0.0 {
            *v *= Complex64::from_polar(1.0, h * a.powf(p));
        }
    }
}

/// One Strang step `N(dt/2) L(dt) N(dt/2)` of size `s.dt`. Trips
/// [`Error::BlowupSuspected`] when the intermediate state has too much mass
/// at the top of the frequency range or exceeds the gradient cap; mass at the
/// outer edge of the domain is an [`Error::Aliasing`] failure instead.
pub fn step(s: &SimState, cfg: &EvolveConfig) -> Result<SimState> {
    let grid = s.u.grid().clone();
    let p = nonlinear_exponent(grid.dim());
    let h = s.dt;
    let mut values = s.u.values().to_vec();
    if cfg.nonlinear {
        nonlinear_phase(&mut values, p, 0.5 * h);
    }
    let mid = RadialField::new(grid.clone(), values)?;
    let mut coeffs = to_coefficients(&mid);
    match alias_report_from_coefficients(&mid, &coeffs).check(grid.alias_fraction()) {
        Err(Error::Aliasing { region: AliasRegion::HighFrequency, fraction }) => {
            return Err(Error::BlowupSuspected { t: s.t, reason: BlowupReason::HighFrequency { fraction } });
        }
        other => other?,
    }
    let grad = (grid.sphere_area() * coeffs.iter().zip(grid.freqs()).map(|(c, xi)| xi * xi * c.norm_sqr()).sum::<f64>()).sqrt();
    if grad > cfg.grad_cap {
        return Err(Error::BlowupSuspected { t: s.t, reason: BlowupReason::GradCap { grad, cap: cfg.grad_cap } });
    }
    apply_free_phase(&mid, &mut coeffs, h);
    let mut values = from_coefficients(&mid, &coeffs).into_values();
    if cfg.nonlinear {
        nonlinear_phase(&mut values, p, 0.5 * h);
    }
    Ok(SimState { t: s.t + h, u: RadialField::new(grid, values)?, dt: s.dt, step_count: s.step_count + 1 })
}

/// `min(dt_max, c / (1 + max|u|^{4/d}))`, clamped below at `dt_min`.
pub fn adapt_dt(s: &SimState, cfg: &EvolveConfig) -> f64 {
    let p = nonlinear_exponent(s.u.grid().dim());
    let rate = if cfg.nonlinear { s.u.max_abs().powf(p) } else { 0.0 };
    (cfg.dt_safety / (1.0 + rate)).min(cfg.dt_max).max(cfg.dt_min)
}

/// Signed size of the next adaptive step toward `t_end`; shortens the step to
/// land on `t_end` and splits the last two steps evenly rather than leave a
/// sliver.
pub fn next_step_size(s: &SimState, t_end: f64, cfg: &EvolveConfig) -> f64 {
    let sign = if t_end >= s.t { 1.0 } else { -1.0 };
    let remaining = (t_end - s.t).abs();
    let mut h = adapt_dt(s, cfg);
    if remaining < h * (1.0 + 1e-9) {
        h = remaining;
    } else if remaining < 2.0 * h {
        h = 0.5 * remaining;
    }
    sign * h
}

/// Step toward `t_end` (either direction) with adaptive steps, landing on it
/// exactly. `observe` sees every accepted state, the initial one included.
pub fn evolve_with(
    mut s: SimState,
    t_end: f64,
    cfg: &EvolveConfig,
    mut observe: impl FnMut(&SimState) -> Result<()>,
) -> Result<SimState> {
    cfg.validate()?;
    let sign = if t_end >= s.t { 1.0 } else { -1.0 };
    observe(&s)?;
    while (t_end - s.t) * sign > 0.0 {
        s.dt = next_step_size(&s, t_end, cfg);
        let mut next = step(&s, cfg)?;
        if (t_end - next.t) * sign <= 0.0 {
            next.t = t_end;
        }
        s = next;
        observe(&s)?;
    }
    Ok(s)
}

pub fn evolve_to(s: SimState, t_end: f64, cfg: &EvolveConfig) -> Result<SimState> {
    evolve_with(s, t_end, cfg, |_| Ok(()))
}

/// Fixed steps of size `dt` (sign taken from the direction of `t_end`); the
/// last step is shortened to land on `t_end`.
pub fn evolve_fixed(mut s: SimState, t_end: f64, dt: f64, cfg: &EvolveConfig) -> Result<SimState> {
    let sign = if t_end >= s.t { 1.0 } else { -1.0 };
    let steps = ((t_end - s.t).abs() / dt - 1e-9).ceil().max(0.0) as u64;
    let t0 = s.t;
    let h = (t_end - t0) / steps.max(1) as f64;
    debug_assert!(h * sign >= 0.0);
    for k in 0..steps {
        s.dt = h;
        s = step(&s, cfg)?;
        s.t = t0 + (k + 1) as f64 * h;
    }
    Ok(s)
}

/// `E = ½‖∇u‖² − d/(2(d+2)) ‖u‖_{2+4/d}^{2+4/d}`.
pub fn energy(u: &RadialField) -> f64 {
    let d = u.grid().dim() as f64;
    let q = 2.0 + 4.0 / d;
    0.5 * gradient_norm_sqr(u) - d / (2.0 * (d + 2.0)) * potential_integral(u, q)
}

/// Free part `½‖∇u‖²` of the energy.
pub fn kinetic_energy(u: &RadialField) -> f64 {
    0.5 * gradient_norm_sqr(u)
}

fn potential_integral(u: &RadialField, q: f64) -> f64 {
    let g = u.grid();
    g.sphere_area() * g.weights().iter().zip(u.values()).map(|(w, v)| w * v.norm().powf(q)).sum::<f64>()
}

pub fn observables(u: &RadialField) -> Observables {
    let g = u.grid();
    let variance =
        g.sphere_area() * g.nodes().iter().zip(g.weights()).zip(u.values()).map(|((r, w), v)| r * r * w * v.norm_sqr()).sum::<f64>();
    Observables {
        mass: u.mass(),
        energy: energy(u),
        grad_norm: gradient_norm_sqr(u).sqrt(),
        variance,
        core_radius: core_radius(u),
    }
}

/// Radius enclosing half of the mass, interpolated between nodes; 0 for the
/// zero field.
pub fn core_radius(u: &RadialField) -> f64 {
    let g = u.grid();
    let parts: Vec<f64> = g.weights().iter().zip(u.values()).map(|(w, v)| w * v.norm_sqr()).collect();
    let total: f64 = parts.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let half = 0.5 * total;
    let mut acc = 0.0;
    let mut prev_r = 0.0;
    for (&r, m) in g.nodes().iter().zip(&parts) {
        if acc + m >= half {
            return prev_r + (half - acc) / m * (r - prev_r);
        }
        acc += m;
        prev_r = r;
    }
    g.r_max()
}

/// Whether the virial prediction uses the focusing or the free energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VirialModel {
    /// `V'' = 16 E`
    Focusing,
    /// `V'' = 8 ‖∇u‖²`
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirialReport {
    /// Finite-difference `V''` at the centre sample.
    pub second_derivative: f64,
    /// `16 E` (or `8‖∇u‖²`), averaged over the samples.
    pub predicted: f64,
    pub relative_deviation: f64,
}

/// Compare the second difference of the variance, at the centre of an
/// equally spaced run of at least five samples, with the virial prediction.
/// Uses the five central samples and the fourth-order stencil.
pub fn virial_check(samples: &[(f64, Observables)], model: VirialModel) -> Result<VirialReport> {
    if samples.len() < 5 {
        return Err(Error::InsufficientPoints { needed: 5, got: samples.len() });
    }
    let h = samples[1].0 - samples[0].0;
    for w in samples.windows(2) {
        if ((w[1].0 - w[0].0) - h).abs() > 1e-9 * h.abs().max(1e-300) {
            return Err(Error::InvalidArgument("virial samples must be equally spaced".into()));
        }
    }
    let c = samples.len() / 2;
    let v = |k: isize| samples[(c as isize + k) as usize].1.variance;
    let second = (-v(-2) + 16.0 * v(-1) - 30.0 * v(0) + 16.0 * v(1) - v(2)) / (12.0 * h * h);
    let n = samples.len() as f64;
    let predicted = match model {
        VirialModel::Focusing => 16.0 * samples.iter().map(|s| s.1.energy).sum::<f64>() / n,
        VirialModel::Free => 8.0 * samples.iter().map(|s| s.1.grad_norm * s.1.grad_norm).sum::<f64>() / n,
    };
    let relative_deviation = (second - predicted).abs() / predicted.abs();
    Ok(VirialReport { second_derivative: second, predicted, relative_deviation })
}

/// Whether `u` passes the aliasing guard of its grid.
pub fn is_resolved(u: &RadialField) -> bool {
    alias_report(u).check(u.grid().alias_fraction()).is_ok()
}

/// Field checkpoint as CSV rows `t,r,re,im`, one per node.
pub fn write_checkpoint(s: &SimState, mut out: impl Write) -> Result<()> {
    for (r, v) in s.u.grid().nodes().iter().zip(s.u.values()) {
        writeln!(out, "{},{},{},{}", s.t, r, v.re, v.im)?;
    }
    Ok(())
}

pub const CHECKPOINT_HEADER: &str = "t,r,re,im";
