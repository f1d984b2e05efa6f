//! Positive radial solution of `ΔQ + |Q|^{4/d} Q = Q` by Petviashvili
//! iteration in the spectral basis of the grid.

use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::radial::{band_limited_laplacian, from_coefficients, origin_from_coefficients, to_coefficients, RadialField, RadialGrid};

pub const DEFAULT_MAX_ITERATIONS: usize = 1000;

const CACHE_MAGIC: &str = "# nls-surgery ground-state v1";

/// Converged ground state profile with its mass and residual certificate.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub profile: RadialField,
    pub mass: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Normalisation ratio of the last iteration; 1 at the fixed point.
    pub stabilizer: f64,
    /// `Q(0)`, evaluated spectrally.
    pub peak: f64,
}

impl GroundState {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.profile.grid()
    }

    pub fn dim(&self) -> usize {
        self.profile.grid().dim()
    }

    /// Radius at which `Q` drops to half its peak.
    pub fn half_max_radius(&self) -> f64 {
        let half = 0.5 * self.peak;
        let nodes = self.grid().nodes();
        let vals = self.profile.values();
        let mut prev = (0.0, self.peak);
        for (&r, v) in nodes.iter().zip(vals) {
            if v.re <= half {
                let (r0, q0) = prev;
                return r0 + (q0 - half) / (q0 - v.re) * (r - r0);
            }
            prev = (r, v.re);
        }
        self.grid().r_max()
    }
}

/// Nonlinearity power `4/d`.
pub fn nonlinear_exponent(dim: usize) -> f64 {
    4.0 / dim as f64
}

/// `‖ΔQ + |Q|^{4/d} Q − Q‖₂`.
pub fn residual(q: &RadialField) -> Result<f64> {
    let p = nonlinear_exponent(q.grid().dim());
    let lap = band_limited_laplacian(q)?;
    let values = lap
        .values()
        .iter()
        .zip(q.values())
        .map(|(l, v)| l + v * v.norm().powf(p) - v)
        .collect();
    Ok(RadialField::new(q.grid().clone(), values)?.mass().sqrt())
}

pub fn solve_ground_state(grid: &Arc<RadialGrid>, tol: f64) -> Result<GroundState> {
    let guess = RadialField::from_real_fn(grid.clone(), |r| 2.0 * (-0.5 * r * r).exp())?;
    solve_ground_state_from(&guess, tol, DEFAULT_MAX_ITERATIONS)
}

/// Petviashvili iteration `Q ← S^γ (1 − Δ)^{-1}(|Q|^{4/d} Q)` with
/// `S = ⟨(1 − Δ)Q, Q⟩ / ⟨|Q|^{4/d} Q, Q⟩` and `γ = (d + 4)/4`.
pub fn solve_ground_state_from(initial: &RadialField, tol: f64, max_iterations: usize) -> Result<GroundState> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol}")));
    }
    let grid = initial.grid().clone();
    let dim = grid.dim();
    let p = nonlinear_exponent(dim);
    let gamma = (dim as f64 + 4.0) / 4.0;
    let sigma = grid.sphere_area();
    let xi2: Vec<f64> = grid.freqs().iter().map(|x| x * x).collect();

    let mut q = positive_part(initial);
    let mut coeffs = to_coefficients(&q);
    let mut iterations = 0;
    let mut res = f64::INFINITY;
    let mut stabilizer;
    loop {
        if iterations >= max_iterations {
            return Err(Error::NonConvergence { iterations, residual: res });
        }
        iterations += 1;
        let nonlinear = q.values().iter().map(|v| v * v.norm().powf(p)).collect();
        let nonlinear = RadialField::new(grid.clone(), nonlinear)?;
        let n_coeffs = to_coefficients(&nonlinear);

        let linear_form: f64 = coeffs.iter().zip(&xi2).map(|(c, k2)| (1.0 + k2) * c.norm_sqr()).sum();
        let nonlinear_form: f64 = n_coeffs.iter().zip(&coeffs).map(|(a, b)| (a * b.conj()).re).sum();
        if !(nonlinear_form > 0.0) {
            // Collapsed onto the trivial solution.
            return Err(Error::NonConvergence { iterations, residual: res });
        }
        stabilizer = linear_form / nonlinear_form;

        // Residual in the orthonormal basis: −(1 + ξ²) c + n.
        let r2: f64 = coeffs.iter().zip(&n_coeffs).zip(&xi2).map(|((c, n), k2)| (n - c * (1.0 + k2)).norm_sqr()).sum();
        res = (sigma * r2).sqrt();
        if !res.is_finite() {
            return Err(Error::NonConvergence { iterations, residual: res });
        }
        if res < tol {
            break;
        }

        let factor = stabilizer.powf(gamma);
        coeffs = n_coeffs.iter().zip(&xi2).map(|(n, k2)| n * (factor / (1.0 + k2))).collect();
        let next = from_coefficients(&q, &coeffs);
        let needs_fold = next.values().iter().any(|v| v.re < 0.0);
        q = positive_part(&next);
        if needs_fold {
            coeffs = to_coefficients(&q);
        }
    }

    let peak = origin_from_coefficients(&grid, &coeffs).re;
    let mass = q.mass();
    // Certify on the physical samples, not the iteration's spectral bookkeeping.
    let residual = residual(&q)?;
    Ok(GroundState { profile: q, mass, residual, iterations, stabilizer, peak })
}

/// `|Re u|`; selects the positive solution and drops rounding-level imaginary parts.
fn positive_part(u: &RadialField) -> RadialField {
    let values = u.values().iter().map(|v| Complex64::new(v.re.abs(), 0.0)).collect();
    RadialField::new(u.grid().clone(), values).expect("finite input")
}

/// Write the profile as CSV with a header carrying the grid key.
pub fn write_cache(gs: &GroundState, mut out: impl Write) -> Result<()> {
    let g = gs.grid();
    writeln!(out, "{CACHE_MAGIC}")?;
    writeln!(
        out,
        "# d={} n={} r_max={} mass={} residual={} iterations={} peak={}",
        g.dim(),
        g.len(),
        g.r_max(),
        gs.mass,
        gs.residual,
        gs.iterations,
        gs.peak
    )?;
    writeln!(out, "r,q")?;
    for (r, v) in g.nodes().iter().zip(gs.profile.values()) {
        writeln!(out, "{r},{}", v.re)?;
    }
    Ok(())
}

pub fn save_cache(gs: &GroundState, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_cache(gs, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Read a cached ground state; the header key must match `grid`.
pub fn read_cache(grid: &Arc<RadialGrid>, input: impl BufRead) -> Result<GroundState> {
    let mut lines = input.lines();
    let magic = lines.next().transpose()?.unwrap_or_default();
    if magic.trim() != CACHE_MAGIC {
        return Err(Error::Parse(format!("not a ground-state cache: {magic:?}")));
    }
    let header = lines.next().transpose()?.unwrap_or_default();
    let mut fields = std::collections::HashMap::new();
    for kv in header.trim_start_matches('#').split_whitespace() {
        if let Some((k, v)) = kv.split_once('=') {
            fields.insert(k.to_string(), v.to_string());
        }
    }
    let get = |k: &str| -> Result<f64> {
        fields
            .get(k)
            .ok_or_else(|| Error::Parse(format!("missing {k}")))?
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("{k}: {e}")))
    };
    if get("d")? as usize != grid.dim() || get("n")? as usize != grid.len() || get("r_max")? != grid.r_max() {
        return Err(Error::GridMismatch);
    }
    let columns = lines.next().transpose()?.unwrap_or_default();
    if columns.trim() != "r,q" {
        return Err(Error::Parse(format!("unexpected columns {columns:?}")));
    }
    let mut values = Vec::with_capacity(grid.len());
    for (line, &node) in lines.zip(grid.nodes()) {
        let line = line?;
        let (r, q) = line.split_once(',').ok_or_else(|| Error::Parse(format!("bad row {line:?}")))?;
        let r: f64 = r.trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
        let q: f64 = q.trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
        if (r - node).abs() > 1e-12 * node.max(1.0) {
            return Err(Error::GridMismatch);
        }
        values.push(Complex64::new(q, 0.0));
    }
    let profile = RadialField::new(grid.clone(), values)?;
    let mass = profile.mass();
    Ok(GroundState {
        mass,
        residual: get("residual")?,
        iterations: get("iterations")? as usize,
        stabilizer: 1.0,
        peak: get("peak")?,
        profile,
    })
}

pub fn load_cache(grid: &Arc<RadialGrid>, path: &Path) -> Result<GroundState> {
    let file = std::fs::File::open(path)?;
    read_cache(grid, std::io::BufReader::new(file))
}
