//! Mass-function analysis and exterior Strichartz-type norms of trajectories.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::Observables;
use crate::radial::{endpoint_exponent, RadialField};

/// Time series of the diagnostics of one run, in increasing time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MassTrace {
    pub times: Vec<f64>,
    pub masses: Vec<f64>,
    pub energies: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub variances: Vec<f64>,
    pub core_radii: Vec<f64>,
    pub window_norms: Vec<f64>,
}

pub const TRACE_HEADER: &str = "t,mass,energy,grad_norm,variance,core_radius,window_norm";

impl MassTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Trace with masses only; the other series are NaN.
    pub fn from_masses(times: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if times.len() != masses.len() {
            return Err(Error::LengthMismatch { expected: times.len(), got: masses.len() });
        }
        let mut trace = Self::new();
        for (t, m) in times.into_iter().zip(masses) {
            trace.push_raw(t, [m, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN])?;
        }
        Ok(trace)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, obs: &Observables, window_norm: f64) -> Result<()> {
        self.push_raw(t, [obs.mass, obs.energy, obs.grad_norm, obs.variance, obs.core_radius, window_norm])
    }

    fn push_raw(&mut self, t: f64, row: [f64; 6]) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("trace time {t}")));
        }
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::InvalidArgument(format!("trace times must increase: {t} after {last}")));
            }
        }
        self.times.push(t);
        self.masses.push(row[0]);
        self.energies.push(row[1]);
        self.grad_norms.push(row[2]);
        self.variances.push(row[3]);
        self.core_radii.push(row[4]);
        self.window_norms.push(row[5]);
        Ok(())
    }

    /// Samples of a run recorded in evolution order; backward runs are
    /// reversed so that times increase.
    pub fn from_evolution_order(rows: Vec<(f64, Observables, f64)>) -> Result<Self> {
        let backward = rows.len() > 1 && rows[1].0 < rows[0].0;
        let mut trace = Self::new();
        let iter: Box<dyn Iterator<Item = (f64, Observables, f64)>> =
            if backward { Box::new(rows.into_iter().rev()) } else { Box::new(rows.into_iter()) };
        for (t, obs, w) in iter {
            trace.push(t, &obs, w)?;
        }
        Ok(trace)
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.times[i],
                self.masses[i],
                self.energies[i],
                self.grad_norms[i],
                self.variances[i],
                self.core_radii[i],
                self.window_norms[i]
            )?;
        }
        Ok(())
    }

    /// Reads a CSV with at least the columns `t` and `mass`; other known
    /// columns are picked up when present.
    pub fn read_csv(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.ok_or_else(|| Error::Parse("empty trace file".into()))?;
        let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
        let find = |name: &str| columns.iter().position(|c| c == name);
        let t_col = find("t").ok_or_else(|| Error::Parse("trace has no `t` column".into()))?;
        let m_col = find("mass").ok_or_else(|| Error::Parse("trace has no `mass` column".into()))?;
        let others = ["energy", "grad_norm", "variance", "core_radius", "window_norm"].map(find);
        let mut trace = Self::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            let get = |col: usize| -> Result<f64> {
                cells
                    .get(col)
                    .ok_or_else(|| Error::Parse(format!("line {}: missing column {}", lineno + 2, columns[col])))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))
            };
            let mut row = [get(m_col)?, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN];
            for (slot, col) in row[1..].iter_mut().zip(others) {
                if let Some(c) = col {
                    *slot = get(c)?;
                }
            }
            trace.push_raw(get(t_col)?, row)?;
        }
        Ok(trace)
    }
}

/// A mass change between adjacent samples larger than the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub t_before: f64,
    pub t_after: f64,
    /// `|ΔM|`
    pub size: f64,
    /// Whether the mass drops in increasing time.
    pub loss: bool,
}

/// Verdicts about a mass trace at its sampling resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub constant_mass: bool,
    pub continuous_mass: bool,
    /// Right-continuous at and after `t0`, left-continuous at and before it.
    pub one_sided_continuous: bool,
    pub jumps: Vec<Jump>,
    /// Samples that differ from both neighbours by more than `eps`: no
    /// placement of the jump times makes the trace one-sided continuous there.
    pub isolated_samples: Vec<f64>,
    pub t0: f64,
    pub eps: f64,
    /// Largest gap between samples; verdicts say nothing finer than this.
    pub max_sample_spacing: f64,
}

/// Jumps are mass changes above `eps` between adjacent samples. A jump
/// between two samples can be placed at either of them, so a one-sided
/// continuity failure shows up only as a sample that disagrees with both of
/// its neighbours; a jump straddling `t0` is consistent with both sides.
pub fn classify_mass_trace(trace: &MassTrace, t0: f64, eps: f64) -> Result<ClassReport> {
    if trace.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, got: 0 });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("jump threshold {eps}")));
    }
    let t = &trace.times;
    let m = &trace.masses;
    let jumps: Vec<Jump> = (1..m.len())
        .filter(|&k| (m[k] - m[k - 1]).abs() > eps)
        .map(|k| Jump { t_before: t[k - 1], t_after: t[k], size: (m[k] - m[k - 1]).abs(), loss: m[k] < m[k - 1] })
        .collect();
    let isolated_samples: Vec<f64> = (1..m.len().saturating_sub(1))
        .filter(|&k| (m[k] - m[k - 1]).abs() > eps && (m[k + 1] - m[k]).abs() > eps)
        .map(|k| t[k])
        .collect();
    let constant_mass = m.iter().all(|&x| (x - m[0]).abs() <= eps);
    let max_sample_spacing = t.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(ClassReport {
        constant_mass,
        continuous_mass: jumps.is_empty(),
        one_sided_continuous: isolated_samples.is_empty(),
        jumps,
        isolated_samples,
        t0,
        eps,
        max_sample_spacing,
    })
}

/// Largest violation of monotonicity in the evolution direction away from
/// `t0`: mass should not increase for `t > t0` nor decrease for `t < t0` in
/// increasing time. Returned relative to the largest mass in the trace.
pub fn monotonicity_violation(trace: &MassTrace, t0: f64) -> f64 {
    let m = &trace.masses;
    let scale = m.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for k in 1..m.len() {
        let (ta, tb) = (trace.times[k - 1], trace.times[k]);
        let dm = m[k] - m[k - 1];
        if ta >= t0 {
            worst = worst.max(dm);
        } else if tb <= t0 {
            worst = worst.max(-dm);
        }
    }
    worst / scale
}

/// Fields sampled along a run, in increasing time.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<RadialField>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: f64, u: RadialField) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::InvalidArgument(format!("trajectory times must increase: {t} after {last}")));
            }
        }
        self.times.push(t);
        self.fields.push(u);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `(∫_I ‖u(t) 1_{r>R}‖²_{L^{2d/(d−2)}} dt)^{1/2}` by the trapezoid rule over
/// the samples in `interval`.
pub fn exterior_strichartz(traj: &Trajectory, interval: (f64, f64), radius: f64) -> Result<f64> {
    let (a, b) = interval;
    let idx: Vec<usize> = (0..traj.len()).filter(|&k| traj.times[k] >= a && traj.times[k] <= b).collect();
    if idx.len() < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: idx.len() });
    }
    let q = endpoint_exponent(traj.fields[idx[0]].grid().dim());
    let vals: Vec<f64> = idx.iter().map(|&k| traj.fields[k].exterior_norm(q, radius).map(|x| x * x)).collect::<Result<_>>()?;
    let mut sum = 0.0;
    for w in 0..idx.len() - 1 {
        sum += 0.5 * (traj.times[idx[w + 1]] - traj.times[idx[w]]) * (vals[w] + vals[w + 1]);
    }
    Ok(sum.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicNorm {
    pub k: i32,
    pub radius: f64,
    pub value: f64,
}

/// `c_k`: the exterior norm outside `B(0, 2^k)` for each `k` in `ks`.
pub fn dyadic_profile(traj: &Trajectory, interval: (f64, f64), ks: std::ops::RangeInclusive<i32>) -> Result<Vec<DyadicNorm>> {
    ks.map(|k| {
        let radius = 2f64.powi(k);
        Ok(DyadicNorm { k, radius, value: exterior_strichartz(traj, interval, radius)? })
    })
    .collect()
}

pub fn write_dyadic_csv(profile: &[DyadicNorm], mut out: impl Write) -> Result<()> {
    writeln!(out, "k,radius,c_k")?;
    for c in profile {
        writeln!(out, "{},{},{}", c.k, c.radius, c.value)?;
    }
    Ok(())
}

/// `2 Re⟨u, v⟩`, the cross term of `M(u − v) = M(u) + M(v) − 2 Re⟨u, v⟩`.
pub fn mass_decoupling(u: &RadialField, v: &RadialField) -> Result<f64> {
    Ok(2.0 * u.inner(v)?.re)
}

/// `max ‖u(t') − u(t)‖₂` over the samples `t'` adjacent to the sample at
/// time `t` (the nearest one).
pub fn strong_continuity_probe(traj: &Trajectory, t: f64) -> Result<f64> {
    let index = (0..traj.len())
        .min_by(|&a, &b| (traj.times[a] - t).abs().total_cmp(&(traj.times[b] - t).abs()))
        .ok_or(Error::InsufficientPoints { needed: 3, got: 0 })?;
    if index == 0 || index + 1 >= traj.len() {
        return Err(Error::InvalidArgument(format!("t = {t} is not interior to the trajectory")));
    }
    let here = &traj.fields[index];
    let left = traj.fields[index - 1].sub(here)?.mass().sqrt();
    let right = traj.fields[index + 1].sub(here)?.mass().sqrt();
    Ok(left.max(right))
}
