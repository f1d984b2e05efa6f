use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::radial::RadialGrid;

/// Complex radial profile `u(r_j)` sampled on the nodes of a [`RadialGrid`].
#[derive(Clone, Debug)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<Complex64>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(RadialField { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.len()];
        RadialField { grid, values }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn from_real_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, |r| Complex64::new(f(r), 0.0))
    }

    /// Internal constructor for values produced by finite arithmetic on
    /// already-validated fields.
    pub(crate) fn from_parts(grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        RadialField { grid, values }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Discrete mass `σ_{d-1} Σ_j w_j |u_j|²`.
    pub fn mass(&self) -> f64 {
        self.grid.sphere_area() * weighted_sum(self.grid.weights(), self.values.iter().map(|v| v.norm_sqr()))
    }

    /// `‖u‖_{L^q(R^d)}` for `q ∈ [2, ∞)`.
    pub fn lebesgue_norm(&self, q: f64) -> Result<f64> {
        check_exponent(q)?;
        Ok(self.lebesgue_norm_where(q, |_| true))
    }

    /// `L^q` norm of `u · 1_{r > radius}`.
    pub fn exterior_norm(&self, q: f64, radius: f64) -> Result<f64> {
        check_exponent(q)?;
        Ok(self.lebesgue_norm_where(q, |r| r > radius))
    }

    fn lebesgue_norm_where(&self, q: f64, keep: impl Fn(f64) -> bool) -> f64 {
        let g = &self.grid;
        let s: f64 = g
            .nodes()
            .iter()
            .zip(g.weights())
            .zip(&self.values)
            .filter(|((&r, _), _)| keep(r))
            .map(|((_, &w), v)| w * v.norm().powf(q))
            .sum();
        (g.sphere_area() * s).powf(1.0 / q)
    }

    /// Mass carried by `r > radius`.
    pub fn exterior_mass(&self, radius: f64) -> f64 {
        let g = &self.grid;
        let s: f64 = g
            .nodes()
            .iter()
            .zip(g.weights())
            .zip(&self.values)
            .filter(|((&r, _), _)| r > radius)
            .map(|((_, &w), v)| w * v.norm_sqr())
            .sum();
        g.sphere_area() * s
    }

    /// `⟨u, v⟩ = ∫ u v̄`.
    pub fn inner(&self, other: &RadialField) -> Result<Complex64> {
        self.check_grid(other)?;
        let s: Complex64 = self
            .grid
            .weights()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(&w, (a, b))| a * b.conj() * w)
            .sum();
        Ok(s * self.grid.sphere_area())
    }

    pub fn sub(&self, other: &RadialField) -> Result<RadialField> {
        self.check_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(RadialField::from_parts(self.grid.clone(), values))
    }

    pub fn add(&self, other: &RadialField) -> Result<RadialField> {
        self.check_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(RadialField::from_parts(self.grid.clone(), values))
    }

    pub fn scale(&self, c: Complex64) -> RadialField {
        let values = self.values.iter().map(|v| v * c).collect();
        RadialField::from_parts(self.grid.clone(), values)
    }

    /// Pointwise product with a real radial profile.
    pub fn multiply_by(&self, f: impl Fn(f64) -> f64) -> RadialField {
        let values = self.grid.nodes().iter().zip(&self.values).map(|(&r, v)| v * f(r)).collect();
        RadialField::from_parts(self.grid.clone(), values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `‖u - v‖₂ / ‖v‖₂`.
    pub fn relative_distance(&self, reference: &RadialField) -> Result<f64> {
        let diff = self.sub(reference)?;
        Ok((diff.mass() / reference.mass()).sqrt())
    }

    pub(crate) fn check_grid(&self, other: &RadialField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Samples `û(ξ_k)` of the `d`-dimensional Fourier transform on the dual grid.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<RadialGrid>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Arc<RadialGrid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: coeffs.len() });
        }
        if let Some(index) = coeffs.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(SpectralField { grid, coeffs })
    }

    pub(crate) fn from_parts(grid: Arc<RadialGrid>, coeffs: Vec<Complex64>) -> Self {
        SpectralField { grid, coeffs }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `∫ |û(ξ)|² dξ`; equals `(2π)^d` times the mass of the field.
    pub fn frequency_mass(&self) -> f64 {
        self.grid.sphere_area() * weighted_sum(self.grid.freq_weights(), self.coeffs.iter().map(|v| v.norm_sqr()))
    }

    /// Apply a real multiplier `m(ξ)`.
    pub fn multiply_by(&self, m: impl Fn(f64) -> f64) -> SpectralField {
        let coeffs = self.grid.freqs().iter().zip(&self.coeffs).map(|(&xi, c)| c * m(xi)).collect();
        SpectralField { grid: self.grid.clone(), coeffs }
    }
}

fn weighted_sum(weights: &[f64], values: impl Iterator<Item = f64>) -> f64 {
    weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

fn check_exponent(q: f64) -> Result<()> {
    if q.is_finite() && q >= 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("Lebesgue exponent {q} outside [2, ∞)")))
    }
}

/// `2d/(d-2)`, the spatial exponent of the endpoint Strichartz norm.
pub fn endpoint_exponent(dim: usize) -> f64 {
    2.0 * dim as f64 / (dim as f64 - 2.0)
}
