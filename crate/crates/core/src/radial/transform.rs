use num_complex::Complex64;

use crate::error::{AliasRegion, Error, Result};
use crate::radial::{RadialField, RadialGrid, SpectralField};

/// Orthonormal coefficients `K (√w ⊙ u)`: the mass is `σ Σ |c_k|²`.
pub(crate) fn to_coefficients(u: &RadialField) -> Vec<Complex64> {
    let g = u.grid();
    let weighted: Vec<Complex64> = u.values().iter().zip(g.sqrt_weights()).map(|(v, s)| v * s).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    g.apply_kernel(&weighted, &mut out);
    out
}

pub(crate) fn from_coefficients(u_like: &RadialField, coeffs: &[Complex64]) -> RadialField {
    let g = u_like.grid();
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    g.apply_kernel(coeffs, &mut out);
    for (v, s) in out.iter_mut().zip(g.sqrt_weights()) {
        *v /= s;
    }
    RadialField::from_parts(g.clone(), out)
}

/// Fraction of mass in the outer tenth of the radius and in the top tenth of
/// the frequency range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AliasReport {
    pub outer_radius: f64,
    pub high_frequency: f64,
}

impl AliasReport {
    pub fn check(&self, threshold: f64) -> Result<()> {
        if self.outer_radius > threshold {
            return Err(Error::Aliasing { region: AliasRegion::OuterRadius, fraction: self.outer_radius });
        }
        if self.high_frequency > threshold {
            return Err(Error::Aliasing { region: AliasRegion::HighFrequency, fraction: self.high_frequency });
        }
        Ok(())
    }
}

pub(crate) fn alias_report_from_coefficients(u: &RadialField, coeffs: &[Complex64]) -> AliasReport {
    let g = u.grid();
    let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return AliasReport { outer_radius: 0.0, high_frequency: 0.0 };
    }
    let r_cut = 0.9 * g.r_max();
    let outer: f64 = g
        .nodes()
        .iter()
        .zip(g.weights())
        .zip(u.values())
        .filter(|((&r, _), _)| r > r_cut)
        .map(|((_, &w), v)| w * v.norm_sqr())
        .sum();
    let physical_total: f64 = g.weights().iter().zip(u.values()).map(|(w, v)| w * v.norm_sqr()).sum();
    let xi_cut = 0.9 * g.max_freq();
    let high: f64 = g.freqs().iter().zip(coeffs).filter(|(&xi, _)| xi > xi_cut).map(|(_, c)| c.norm_sqr()).sum();
    AliasReport { outer_radius: outer / physical_total, high_frequency: high / total }
}

pub fn alias_report(u: &RadialField) -> AliasReport {
    alias_report_from_coefficients(u, &to_coefficients(u))
}

/// The `d`-dimensional Fourier transform of the radial extension of `u`,
/// sampled on the dual grid. Refuses fields that trip the aliasing guard.
pub fn radial_transform(u: &RadialField) -> Result<SpectralField> {
    let coeffs = to_coefficients(u);
    alias_report_from_coefficients(u, &coeffs).check(u.grid().alias_fraction())?;
    Ok(spectral_from_coefficients(u, coeffs))
}

fn spectral_from_coefficients(u: &RadialField, mut coeffs: Vec<Complex64>) -> SpectralField {
    for (c, s) in coeffs.iter_mut().zip(u.grid().spectral_scale()) {
        *c *= s;
    }
    SpectralField::from_parts(u.grid().clone(), coeffs)
}

pub fn inverse_transform(f: &SpectralField) -> RadialField {
    let g = f.grid();
    let coeffs: Vec<Complex64> = f.coeffs().iter().zip(g.spectral_scale()).map(|(c, s)| c / s).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    g.apply_kernel(&coeffs, &mut out);
    for (v, s) in out.iter_mut().zip(g.sqrt_weights()) {
        *v /= s;
    }
    RadialField::from_parts(g.clone(), out)
}

/// Free Schrödinger evolution `e^{itΔ}`: multiplies `û` by `e^{-itξ²}`.
pub fn free_propagate(u: &RadialField, t: f64) -> RadialField {
    if t == 0.0 {
        return u.clone();
    }
    let mut coeffs = to_coefficients(u);
    apply_free_phase(u, &mut coeffs, t);
    from_coefficients(u, &coeffs)
}

pub(crate) fn apply_free_phase(u: &RadialField, coeffs: &mut [Complex64], t: f64) {
    for (c, &xi) in coeffs.iter_mut().zip(u.grid().freqs()) {
        *c *= Complex64::from_polar(1.0, -t * xi * xi);
    }
}

/// Spectral Laplacian. Refuses fields that trip the aliasing guard.
pub fn laplacian(u: &RadialField) -> Result<RadialField> {
    let mut coeffs = to_coefficients(u);
    alias_report_from_coefficients(u, &coeffs).check(u.grid().alias_fraction())?;
    for (c, &xi) in coeffs.iter_mut().zip(u.grid().freqs()) {
        *c *= -xi * xi;
    }
    Ok(from_coefficients(u, &coeffs))
}

/// `∫ |∇u|²`, computed as `∫ ξ² |û|² / (2π)^d`.
pub fn gradient_norm_sqr(u: &RadialField) -> f64 {
    let coeffs = to_coefficients(u);
    let g = u.grid();
    g.sphere_area() * coeffs.iter().zip(g.freqs()).map(|(c, xi)| xi * xi * c.norm_sqr()).sum::<f64>()
}

/// `u(0) = (2π)^{-d} ∫ û(ξ) dξ`, the band-limited value at the origin.
pub fn value_at_origin(u: &RadialField) -> Complex64 {
    origin_from_coefficients(u.grid(), &to_coefficients(u))
}

pub(crate) fn origin_from_coefficients(grid: &RadialGrid, coeffs: &[Complex64]) -> Complex64 {
    let s: Complex64 = coeffs.iter().zip(grid.spectral_scale()).map(|(c, k)| c / k).sum();
    s * grid.sphere_area()
}

/// Zero the spectral coefficients beyond the noise plateau: resampling noise
/// there would otherwise be amplified by derivatives.
pub(crate) fn trim_spectral_tail(u: RadialField) -> RadialField {
    let mut coeffs = to_coefficients(&u);
    let keep = signal_bandwidth(&coeffs);
    if keep == coeffs.len() {
        return u;
    }
    coeffs[keep..].iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
    from_coefficients(&u, &coeffs)
}

/// Ratio to the spectral noise plateau above which a coefficient counts as
/// signal.
pub(crate) const NOISE_MARGIN: f64 = 100.0;

/// Spectral Laplacian of the part of `u` above the rounding-noise plateau of
/// its spectrum, estimated as the median magnitude over the upper half of the
/// frequencies. Meant for smooth, spectrally decaying fields: plain
/// [`laplacian`] amplifies sample rounding by `ξ_max²`.
pub fn band_limited_laplacian(u: &RadialField) -> Result<RadialField> {
    let mut coeffs = to_coefficients(u);
    alias_report_from_coefficients(u, &coeffs).check(u.grid().alias_fraction())?;
    let keep = signal_bandwidth(&coeffs);
    for (k, (c, &xi)) in coeffs.iter_mut().zip(u.grid().freqs()).enumerate() {
        *c *= if k < keep { -xi * xi } else { 0.0 };
    }
    Ok(from_coefficients(u, &coeffs))
}

/// Number of leading coefficients up to the last one above the noise plateau.
pub(crate) fn signal_bandwidth(coeffs: &[Complex64]) -> usize {
    let mut upper: Vec<f64> = coeffs[coeffs.len() / 2..].iter().map(|c| c.norm()).collect();
    upper.sort_by(f64::total_cmp);
    let plateau = upper[upper.len() / 2];
    coeffs.iter().rposition(|c| c.norm() > NOISE_MARGIN * plateau).map_or(0, |k| k + 1)
}
