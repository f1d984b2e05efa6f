//! Closed-form solution families built from a ground state: the
//! pseudoconformal blowup solution and rescaled stationary solitons, plus the
//! mass-preserving scaling of arbitrary fields.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ground_state::{nonlinear_exponent, GroundState};
use crate::radial::{alias_report, band_limited_laplacian, trim_spectral_tail, BandLimited, RadialField, RadialGrid};

/// Fewest grid cells the half-maximum radius of a sampled core may span.
pub const MIN_CORE_CELLS: f64 = 8.0;


#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyKind {
    /// `|t|^{-d/2} e^{-i/t} e^{ir²/4t} Q(r/t)`
    Pseudoconformal,
    /// `R^{-d/2} e^{it/R²} Q(r/R)`
    RescaledSoliton { radius: f64 },
}

/// A ground state together with its band-limited extension, ready to be
/// sampled at any time on any grid of the same dimension.
#[derive(Clone, Debug)]
pub struct SolutionFamily {
    kind: FamilyKind,
    ground: Arc<GroundState>,
    profile: Arc<BandLimited>,
    half_max: f64,
}

impl SolutionFamily {
    pub fn pseudoconformal(ground: &GroundState) -> Self {
        Self::build(FamilyKind::Pseudoconformal, ground)
    }

    pub fn rescaled_soliton(ground: &GroundState, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("soliton radius {radius}")));
        }
        Ok(Self::build(FamilyKind::RescaledSoliton { radius }, ground))
    }

    /// Same ground state and extension, different member of the family.
    pub fn with_kind(&self, kind: FamilyKind) -> Self {
        Self { kind, ..self.clone() }
    }

    fn build(kind: FamilyKind, ground: &GroundState) -> Self {
        let profile = BandLimited::new(&ground.profile);
        let half_max = bisect_half_max(&profile, ground.peak, ground.half_max_radius());
        Self { kind, ground: Arc::new(ground.clone()), profile: Arc::new(profile), half_max }
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn ground_state(&self) -> &GroundState {
        &self.ground
    }

    /// `Q(r)` off the grid.
    pub fn profile_at(&self, r: f64) -> f64 {
        self.profile.eval(r).re
    }

    /// Radius where `|u(t)|` falls to half its maximum.
    pub fn half_max_radius(&self, t: f64) -> f64 {
        self.length_scale(t) * self.half_max
    }

    fn length_scale(&self, t: f64) -> f64 {
        match self.kind {
            FamilyKind::Pseudoconformal => t.abs(),
            FamilyKind::RescaledSoliton { radius } => radius,
        }
    }

    /// The exact solution at time `t`, sampled on `grid`.
    pub fn sample(&self, t: f64, grid: &Arc<RadialGrid>) -> Result<RadialField> {
        if grid.dim() != self.ground.dim() {
            return Err(Error::InvalidArgument(format!(
                "dimension {} does not match the ground state's {}",
                grid.dim(),
                self.ground.dim()
            )));
        }
        if !t.is_finite() || (self.kind == FamilyKind::Pseudoconformal && t == 0.0) {
            return Err(Error::InvalidArgument(format!("time {t}")));
        }
        let cells = self.half_max_radius(t) / grid.spacing();
        if cells < MIN_CORE_CELLS {
            return Err(Error::UnresolvedCore { cells });
        }
        let d = grid.dim() as f64;
        let scale = self.length_scale(t);
        // On a dilation of the ground state's grid by `scale` the needed
        // profile values are the stored samples themselves.
        let base = self.ground.grid();
        let on_ground_grid =
            grid.len() == base.len() && (grid.r_max() - scale * base.r_max()).abs() <= 1e-15 * grid.r_max();
        let q = |j: usize, r: f64| {
            if on_ground_grid {
                self.ground.profile.values()[j].re
            } else {
                self.profile_at(r / scale)
            }
        };
        let amplitude = scale.powf(-d / 2.0);
        let field = match self.kind {
            FamilyKind::Pseudoconformal => {
                let global = Complex64::from_polar(amplitude, -1.0 / t);
                let values = grid
                    .nodes()
                    .iter()
                    .enumerate()
                    .map(|(j, &r)| global * Complex64::from_polar(q(j, r), r * r / (4.0 * t)))
                    .collect();
                RadialField::new(grid.clone(), values)?
            }
            FamilyKind::RescaledSoliton { radius } => {
                let global = Complex64::from_polar(amplitude, t / (radius * radius));
                let values = grid.nodes().iter().enumerate().map(|(j, &r)| global * q(j, r)).collect();
                RadialField::new(grid.clone(), values)?
            }
        };
        if on_ground_grid {
            Ok(field)
        } else {
            Ok(trim_spectral_tail(field))
        }
    }

    /// `‖i u_t + Δu + |u|^{4/d} u‖₂` at time `t`, with `u_t` by the
    /// fourth-order centred difference of step `h`.
    pub fn nls_residual(&self, t: f64, h: f64, grid: &Arc<RadialGrid>) -> Result<f64> {
        let at = |k: f64| self.sample(t + k * h, grid);
        let (m2, m1, now, p1, p2) = (at(-2.0)?, at(-1.0)?, at(0.0)?, at(1.0)?, at(2.0)?);
        let du = |j: usize| {
            (8.0 * (p1.values()[j] - m1.values()[j]) - (p2.values()[j] - m2.values()[j])) / (12.0 * h)
        };
        let lap = band_limited_laplacian(&now)?;
        let p = nonlinear_exponent(grid.dim());
        let values = (0..grid.len())
            .map(|j| {
                let u = now.values()[j];
                Complex64::i() * du(j) + lap.values()[j] + u * u.norm().powf(p)
            })
            .collect();
        Ok(RadialField::new(grid.clone(), values)?.mass().sqrt())
    }
}

fn bisect_half_max(profile: &BandLimited, peak: f64, guess: f64) -> f64 {
    let half = 0.5 * peak;
    let f = |r: f64| profile.eval(r).re - half;
    let (mut lo, mut hi) = (0.5 * guess, 1.5 * guess);
    while f(lo) < 0.0 && lo > 1e-12 {
        lo *= 0.5;
    }
    while f(hi) > 0.0 && hi < profile.r_max() {
        hi *= 1.5;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Samples of the pseudoconformal solution at time `t ≠ 0`.
pub fn pseudoconformal(ground: &GroundState, t: f64, grid: &Arc<RadialGrid>) -> Result<RadialField> {
    SolutionFamily::pseudoconformal(ground).sample(t, grid)
}

/// Samples of the rescaled stationary soliton of radius `radius` at time `t`.
pub fn rescaled_soliton(ground: &GroundState, radius: f64, t: f64, grid: &Arc<RadialGrid>) -> Result<RadialField> {
    SolutionFamily::rescaled_soliton(ground, radius)?.sample(t, grid)
}

/// `λ^{-d/2} u(r/λ)` on the same grid. When a time is supplied it is mapped
/// along with the field, `t ↦ λ² t`, as the scaling symmetry of the equation
/// requires.
pub fn scaled_copy(u: &RadialField, lambda: f64, time: Option<f64>) -> Result<(RadialField, Option<f64>)> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale factor {lambda}")));
    }
    let time = time.map(|t| lambda * lambda * t);
    if lambda == 1.0 {
        return Ok((u.clone(), time));
    }
    let grid = u.grid();
    let ext = BandLimited::new(u);
    let amplitude = lambda.powf(-(grid.dim() as f64) / 2.0);
    let field = RadialField::from_fn(grid.clone(), |r| ext.eval(r / lambda) * amplitude)?;
    alias_report(&field).check(grid.alias_fraction())?;
    Ok((trim_spectral_tail(field), time))
}
