use num_complex::Complex64;

use crate::radial::transform::{signal_bandwidth, to_coefficients};
use crate::radial::RadialField;
use crate::special::bessel_j;

/// Band-limited extension of a grid field to arbitrary radii,
/// `u(r) = σ Σ_k (c_k / κ_k) Λ(ξ_k r)` with `Λ` the spherical mean of a plane
/// wave, and zero beyond `r_max`. Reproduces the samples at the nodes.
#[derive(Clone, Debug)]
pub struct BandLimited {
    twice_order: u32,
    nu: f64,
    gamma_factor: f64,
    r_max: f64,
    freqs: Vec<f64>,
    amps: Vec<Complex64>,
}

impl BandLimited {
    pub fn new(u: &RadialField) -> Self {
        let g = u.grid();
        let coeffs = to_coefficients(u);
        let sigma = g.sphere_area();
        let mut amps: Vec<Complex64> = coeffs.iter().zip(g.spectral_scale()).map(|(c, k)| c * (sigma / k)).collect();
        let keep = signal_bandwidth(&coeffs);
        amps.truncate(keep);
        let dim = g.dim();
        let nu = dim as f64 / 2.0 - 1.0;
        Self {
            twice_order: (dim - 2) as u32,
            nu,
            gamma_factor: gamma(nu + 1.0) * 2f64.powf(nu),
            r_max: g.r_max(),
            freqs: g.freqs()[..keep].to_vec(),
            amps,
        }
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Number of frequencies retained.
    pub fn bandwidth(&self) -> usize {
        self.amps.len()
    }

    pub fn eval(&self, r: f64) -> Complex64 {
        if r > self.r_max || r < 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.freqs.iter().zip(&self.amps).map(|(&xi, a)| a * self.spherical_mean(xi * r)).sum()
    }

    /// `Γ(ν+1) (2/z)^ν J_ν(z)`, equal to 1 at the origin.
    fn spherical_mean(&self, z: f64) -> f64 {
        if z < 1e-3 {
            let z2 = 0.25 * z * z;
            return 1.0 - z2 / (self.nu + 1.0) + z2 * z2 / (2.0 * (self.nu + 1.0) * (self.nu + 2.0));
        }
        self.gamma_factor * z.powf(-self.nu) * bessel_j(self.twice_order, z)
    }
}

/// `Γ(x)` for positive integer or half-integer `x`.
fn gamma(x: f64) -> f64 {
    let mut g = if (x - x.round()).abs() < 1e-12 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut y = if (x - x.round()).abs() < 1e-12 { 1.0 } else { 0.5 };
    while y < x - 0.25 {
        g *= y;
        y += 1.0;
    }
    g
}
