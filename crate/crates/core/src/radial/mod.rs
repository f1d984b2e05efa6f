//! Radial grids, the radial Fourier transform, the free propagator and the
//! frequency/space projections built on top of them.

mod evaluate;
mod field;
mod grid;
mod projection;
mod transform;

pub use evaluate::BandLimited;
pub use field::{endpoint_exponent, RadialField, SpectralField};
pub use grid::{smooth_step, sphere_area, RadialGrid, DEFAULT_ALIAS_FRACTION};
pub use projection::{bump, in_out_project, lp_project, Direction, LpKind};
pub use transform::{
    alias_report, band_limited_laplacian, free_propagate, gradient_norm_sqr, inverse_transform, laplacian, radial_transform, value_at_origin, AliasReport,
};

pub(crate) use transform::{alias_report_from_coefficients, apply_free_phase, from_coefficients, origin_from_coefficients, to_coefficients, trim_spectral_tail};
