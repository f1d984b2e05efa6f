use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::{bessel_j, bessel_j_zeros, bessel_y};

/// Default fraction of mass allowed in the outer tenth of the radius or the
/// top tenth of the frequency range before transforms refuse a field.
pub const DEFAULT_ALIAS_FRACTION: f64 = 0.01;

/// Radial grid for functions on `R^d` together with its dual frequency grid.
///
/// Nodes sit at the scaled zeros of `J_ν`, `ν = d/2 - 1`:
/// `r_j = α_j r_max / α_{n+1}` and `ξ_k = α_k / r_max`. The discrete Hankel
/// kernel on these nodes is orthogonal up to ~1e-12; one Newton–Schulz
/// step makes it orthogonal to rounding, so the transform pair is exactly
/// inverse and every phase multiplier is an exact isometry of the discrete
/// mass.
pub struct RadialGrid {
    dim: usize,
    r_max: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    sqrt_weights: Vec<f64>,
    freqs: Vec<f64>,
    freq_weights: Vec<f64>,
    spectral_scale: Vec<f64>,
    // |J_{ν+1}(α_k)|, reused by the Hankel-Y kernel.
    edge_amplitude: Vec<f64>,
    zeros: Vec<f64>,
    last_zero: f64,
    sphere_area: f64,
    alias_fraction: f64,
    kernel: PackedSymmetric,
    hankel_y: OnceLock<PackedSymmetric>,
}

impl std::fmt::Debug for RadialGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialGrid")
            .field("dim", &self.dim)
            .field("n", &self.nodes.len())
            .field("r_max", &self.r_max)
            .finish_non_exhaustive()
    }
}

impl RadialGrid {
    pub fn new(dim: usize, n: usize, r_max: f64) -> Result<Arc<Self>> {
        Self::with_alias_fraction(dim, n, r_max, DEFAULT_ALIAS_FRACTION)
    }

    pub fn with_alias_fraction(dim: usize, n: usize, r_max: f64, alias_fraction: f64) -> Result<Arc<Self>> {
        if dim < 4 {
            return Err(Error::InvalidGrid(format!("dimension {dim} < 4")));
        }
        if n < 8 {
            return Err(Error::InvalidGrid(format!("{n} nodes is too few")));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidGrid(format!("r_max = {r_max}")));
        }
        if !(alias_fraction > 0.0 && alias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!("alias fraction {alias_fraction}")));
        }
        let twice_order = (dim - 2) as u32;
        let nu = twice_order as f64 / 2.0;
        let mut zeros = bessel_j_zeros(twice_order, n + 1);
        let last_zero = zeros.pop().expect("n + 1 zeros");

        let edge_amplitude: Vec<f64> = zeros.iter().map(|&a| bessel_j(twice_order + 2, a).abs()).collect();
        let nodes: Vec<f64> = zeros.iter().map(|&a| a * r_max / last_zero).collect();
        let freqs: Vec<f64> = zeros.iter().map(|&a| a / r_max).collect();

        let base = 2.0 * r_max * r_max / (last_zero * last_zero);
        let weights: Vec<f64> = nodes
            .iter()
            .zip(&edge_amplitude)
            .map(|(&r, &a)| r.powi(twice_order as i32) * base / (a * a))
            .collect();
        let sqrt_weights = weights.iter().map(|w| w.sqrt()).collect();

        let two_pi_half_d = (2.0 * PI).powf(dim as f64 / 2.0);
        let spectral_scale: Vec<f64> = freqs
            .iter()
            .zip(&edge_amplitude)
            .map(|(&xi, &a)| two_pi_half_d * xi.powf(-nu) * r_max / 2f64.sqrt() * a)
            .collect();
        let two_pi_d = two_pi_half_d * two_pi_half_d;
        let freq_weights = spectral_scale.iter().map(|k| two_pi_d / (k * k)).collect();

        let mut kernel = vec![0.0; n * n];
        for j in 0..n {
            for k in j..n {
                let z = zeros[j] * zeros[k] / last_zero;
                let v = 2.0 * bessel_j(twice_order, z) / (last_zero * edge_amplitude[j] * edge_amplitude[k]);
                kernel[j * n + k] = v;
                kernel[k * n + j] = v;
            }
        }
        orthogonal_polish(&mut kernel, n);

        Ok(Arc::new(RadialGrid {
            dim,
            r_max,
            nodes,
            weights,
            sqrt_weights,
            freqs,
            freq_weights,
            spectral_scale,
            edge_amplitude,
            zeros,
            last_zero,
            sphere_area: sphere_area(dim),
            alias_fraction,
            kernel: PackedSymmetric::from_dense(&kernel, n),
            hankel_y: OnceLock::new(),
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `w_j` such that `∫_{R^d} f ≈ σ_{d-1} Σ_j w_j f(r_j)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// Dual weights: `∫_{R^d} g(ξ) dξ ≈ σ_{d-1} Σ_k W_k g(ξ_k)`.
    pub fn freq_weights(&self) -> &[f64] {
        &self.freq_weights
    }

    pub fn max_freq(&self) -> f64 {
        *self.freqs.last().expect("non-empty grid")
    }

    /// Area of the unit sphere `S^{d-1}`.
    pub fn sphere_area(&self) -> f64 {
        self.sphere_area
    }

    pub fn alias_fraction(&self) -> f64 {
        self.alias_fraction
    }

    /// Typical node spacing.
    pub fn spacing(&self) -> f64 {
        PI * self.r_max / self.last_zero
    }

    /// Same parameters (and therefore the same nodes and kernel).
    pub fn same_as(&self, other: &RadialGrid) -> bool {
        std::ptr::eq(self, other)
            || (self.dim == other.dim
                && self.nodes.len() == other.nodes.len()
                && self.r_max == other.r_max)
    }

    pub(crate) fn sqrt_weights(&self) -> &[f64] {
        &self.sqrt_weights
    }

    pub(crate) fn spectral_scale(&self) -> &[f64] {
        &self.spectral_scale
    }

    /// `y = K x` for the symmetric orthogonal transform kernel.
    pub(crate) fn apply_kernel(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.kernel.apply(x, y);
    }

    /// Hankel-Y companion of the transform kernel, with `Y_ν(ξ r)` switched
    /// off smoothly on `1 < ξ r < 2` (and zero below) where it is singular.
    pub(crate) fn apply_hankel_y(&self, x: &[Complex64], y: &mut [Complex64]) {
        let kernel = self.hankel_y.get_or_init(|| {
            let n = self.len();
            let twice_order = (self.dim - 2) as u32;
            let mut k = vec![0.0; n * n];
            for a in 0..n {
                for b in a..n {
                    let z = self.zeros[a] * self.zeros[b] / self.last_zero;
                    let cut = smooth_step(z - 1.0);
                    let v = if cut == 0.0 {
                        0.0
                    } else {
                        2.0 * cut * bessel_y(twice_order, z)
                            / (self.last_zero * self.edge_amplitude[a] * self.edge_amplitude[b])
                    };
                    k[a * n + b] = v;
                    k[b * n + a] = v;
                }
            }
            PackedSymmetric::from_dense(&k, n)
        });
        kernel.apply(x, y);
    }
}

/// C^∞ transition: 0 for `x ≤ 0`, 1 for `x ≥ 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

/// `2 π^{d/2} / Γ(d/2)`.
pub fn sphere_area(dim: usize) -> f64 {
    2.0 * PI.powf(dim as f64 / 2.0) / gamma_half_integer(dim)
}

/// `Γ(m/2)` for a positive integer `m`.
fn gamma_half_integer(m: usize) -> f64 {
    if m % 2 == 0 {
        (1..m / 2).map(|k| k as f64).product()
    } else {
        // Γ(1/2) = √π, Γ(x+1) = x Γ(x)
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < m as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Upper triangle of a symmetric matrix, row by row.
pub(crate) struct PackedSymmetric {
    n: usize,
    data: Vec<f64>,
}

impl PackedSymmetric {
    fn from_dense(dense: &[f64], n: usize) -> Self {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            data.extend_from_slice(&dense[i * n + i..(i + 1) * n]);
        }
        PackedSymmetric { n, data }
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(y.len(), n);
        y.fill(Complex64::new(0.0, 0.0));
        let mut offset = 0;
        for i in 0..n {
            let row = &self.data[offset..offset + n - i];
            offset += n - i;
            let xi = x[i];
            let mut acc = xi * row[0];
            let (xs, ys) = (&x[i + 1..], &mut y[i + 1..]);
            for ((&a, xj), yj) in row[1..].iter().zip(xs).zip(ys.iter_mut()) {
                acc += xj * a;
                *yj += xi * a;
            }
            y[i] += acc;
        }
    }
}

/// One Newton–Schulz step `X ← X + X (I - X²) / 2` followed by
/// symmetrisation. Quadratic convergence takes the ~1e-12 orthogonality
/// defect of the raw kernel down to rounding.
fn orthogonal_polish(x: &mut [f64], n: usize) {
    let mut defect = vec![0.0; n * n];
    for i in 0..n {
        defect[i * n + i] = 1.0;
    }
    let ni = n as isize;
    // SAFETY: all buffers are n×n row-major and do not alias the output.
    unsafe {
        matrixmultiply::dgemm(
            n, n, n, -1.0, x.as_ptr(), ni, 1, x.as_ptr(), ni, 1, 1.0, defect.as_mut_ptr(), ni, 1,
        );
    }
    let snapshot = x.to_vec();
    unsafe {
        matrixmultiply::dgemm(
            n, n, n, 0.5, snapshot.as_ptr(), ni, 1, defect.as_ptr(), ni, 1, 1.0, x.as_mut_ptr(), ni, 1,
        );
    }
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (x[i * n + j] + x[j * n + i]);
            x[i * n + j] = m;
            x[j * n + i] = m;
        }
    }
}
