//! Littlewood–Paley multipliers and the in/out decomposition of radial waves.

use num_complex::Complex64;

use crate::radial::grid::smooth_step;
use crate::radial::transform::{from_coefficients, to_coefficients};
use crate::radial::RadialField;

/// Which Littlewood–Paley piece to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpKind {
    /// `φ(ξ/N)`
    Low,
    /// `1 - φ(ξ/N)`
    High,
    /// `ψ(ξ/N) = φ(ξ/N) - φ(2ξ/N)`
    Band,
}

/// Radial bump: 1 on `|ξ| ≤ 1`, 0 on `|ξ| ≥ 11/10`, C^∞ in between.
pub fn bump(s: f64) -> f64 {
    1.0 - smooth_step((s - 1.0) * 10.0)
}

pub fn lp_project(u: &RadialField, scale: f64, kind: LpKind) -> RadialField {
    assert!(scale > 0.0, "Littlewood-Paley scale must be positive");
    match kind {
        LpKind::Low => apply_multiplier(u, |xi| bump(xi / scale)),
        // Complement of the same multiplier array, so Low + High is the identity.
        LpKind::High => {
            let low = apply_multiplier(u, |xi| bump(xi / scale));
            let values = u.values().iter().zip(low.values()).map(|(a, b)| a - b).collect();
            RadialField::from_parts(u.grid().clone(), values)
        }
        LpKind::Band => apply_multiplier(u, |xi| bump(xi / scale) - bump(2.0 * xi / scale)),
    }
}

fn apply_multiplier(u: &RadialField, m: impl Fn(f64) -> f64) -> RadialField {
    let g = u.grid();
    let mult: Vec<f64> = g.freqs().iter().map(|&xi| m(xi)).collect();
    if mult.iter().all(|&v| v == 1.0) {
        return u.clone();
    }
    if mult.iter().all(|&v| v == 0.0) {
        return RadialField::zeros(g.clone());
    }
    let mut coeffs = to_coefficients(u);
    for (c, m) in coeffs.iter_mut().zip(&mult) {
        *c *= m;
    }
    from_coefficients(u, &coeffs)
}

/// Outgoing or incoming half of a radial wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Outgoing,
    Incoming,
}

/// `P_±`: the Bessel factor `J_ν` of the radial Fourier kernel is split into
/// its Hankel halves `(J_ν ± i Y_ν) / 2`. `Y_ν(ξr)` is switched off smoothly
/// for `ξr < 2`, where it is not square integrable against `r^{d-1}`.
/// `P_+ + P_-` is the identity by construction.
pub fn in_out_project(u: &RadialField, direction: Direction) -> RadialField {
    let g = u.grid();
    let coeffs = to_coefficients(u);
    let mut y_part = vec![Complex64::new(0.0, 0.0); g.len()];
    g.apply_hankel_y(&coeffs, &mut y_part);
    let sign = match direction {
        Direction::Outgoing => 1.0,
        Direction::Incoming => -1.0,
    };
    let i_half = Complex64::new(0.0, 0.5 * sign);
    let values = u
        .values()
        .iter()
        .zip(&y_part)
        .zip(g.sqrt_weights())
        .map(|((v, y), s)| 0.5 * v + i_half * (y / s))
        .collect();
    RadialField::from_parts(g.clone(), values)
}
