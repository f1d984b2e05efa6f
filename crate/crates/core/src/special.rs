//! Bessel functions of the first and second kind for the integer and
//! half-integer orders that radial Fourier analysis in `d` dimensions needs
//! (order `d/2 - 1`).
//!
//! Orders are passed as `twice_order = 2ν`, so `d - 2` for a `d`-dimensional
//! radial transform. Accuracy is close to machine precision on `x > 0`; the
//! radial transform kernel relies on that for its near-orthogonality.

use std::f64::consts::{FRAC_2_PI, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Crossover between the local methods and the Hankel asymptotic expansion.
const ASYMPTOTIC_X: f64 = 25.0;

/// `J_ν(x)` for `ν = twice_order / 2`, `x > 0`.
pub fn bessel_j(twice_order: u32, x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if twice_order % 2 == 1 {
        let l = (twice_order - 1) / 2;
        (2.0 * x / PI).sqrt() * spherical_j(l, x)
    } else {
        let n = twice_order / 2;
        if x >= ASYMPTOTIC_X {
            hankel_asymptotic(n as f64, x).0
        } else {
            integer_j_sequence(n as usize, x)[n as usize]
        }
    }
}

/// `Y_ν(x)` for `ν = twice_order / 2`, `x > 0`.
pub fn bessel_y(twice_order: u32, x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if twice_order % 2 == 1 {
        let l = (twice_order - 1) / 2;
        (2.0 * x / PI).sqrt() * spherical_y(l, x)
    } else {
        let n = (twice_order / 2) as usize;
        if x >= ASYMPTOTIC_X {
            return hankel_asymptotic(n as f64, x).1;
        }
        let j = integer_j_sequence(1, x);
        let log_term = (x / 2.0).ln() + EULER_GAMMA;
        // Neumann series for Y_0 and its derivative (Y_1 = -Y_0').
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        let mut k = 1;
        while 2 * k + 1 < j.len() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s0 += sign * j[2 * k] / k as f64;
            s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / (2 * k) as f64;
            k += 1;
        }
        let y0 = FRAC_2_PI * log_term * j[0] - 2.0 * FRAC_2_PI * s0;
        let y1 = -(FRAC_2_PI * (j[0] / x - log_term * j[1]) - 2.0 * FRAC_2_PI * s1);
        if n == 0 {
            return y0;
        }
        let (mut prev, mut cur) = (y0, y1);
        for k in 1..n {
            let next = 2.0 * k as f64 / x * cur - prev;
            prev = cur;
            cur = next;
        }
        cur
    }
}

/// Spherical Bessel `j_l(x)`.
fn spherical_j(l: u32, x: f64) -> f64 {
    if x < l as f64 + 2.0 {
        // Power series; converges fast and without cancellation in this range.
        let mut lead = 1.0;
        for k in 0..l {
            lead *= x / (2 * k + 3) as f64;
        }
        let z = -0.5 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1u32;
        loop {
            term *= z / (k as f64 * (2 * l + 2 * k + 1) as f64);
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
            k += 1;
        }
        return lead * sum;
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    if l == 0 {
        return j0;
    }
    let mut prev = j0;
    let mut cur = s / (x * x) - c / x;
    for k in 1..l {
        let next = (2 * k + 1) as f64 / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Spherical Bessel `y_l(x)`; upward recurrence is stable for all `x`.
fn spherical_y(l: u32, x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    let y0 = -c / x;
    if l == 0 {
        return y0;
    }
    let mut prev = y0;
    let mut cur = -c / (x * x) - s / x;
    for k in 1..l {
        let next = (2 * k + 1) as f64 / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Normalised `J_0(x) ..= J_m(x)` by Miller's backward recurrence, with
/// `m` large enough that the tail is negligible and at least `min_order + 1`.
fn integer_j_sequence(min_order: usize, x: f64) -> Vec<f64> {
    let top = {
        let m = min_order.max(x.ceil() as usize) + 40;
        m + m % 2
    };
    let mut seq = vec![0.0; top + 2];
    seq[top + 1] = 0.0;
    seq[top] = 1e-300;
    for k in (1..=top).rev() {
        seq[k - 1] = 2.0 * k as f64 / x * seq[k] - seq[k + 1];
        if seq[k - 1].abs() > 1e250 {
            for v in &mut seq[k - 1..] {
                *v *= 1e-250;
            }
        }
    }
    // 1 = J_0 + 2 Σ_{k≥1} J_{2k}
    let norm = seq[0] + 2.0 * seq.iter().skip(2).step_by(2).sum::<f64>();
    for v in &mut seq {
        *v /= norm;
    }
    seq
}

/// Hankel asymptotic expansion, returning `(J_ν(x), Y_ν(x))` for large `x`.
/// The series terminates (and is exact) for half-integer orders.
fn hankel_asymptotic(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        let mag = term.abs();
        if mag == 0.0 || mag > last {
            break;
        }
        last = mag;
        // P collects even k with sign (-1)^{k/2}; Q collects odd k with sign (-1)^{(k-1)/2}.
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if mag < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    let (s, c) = chi.sin_cos();
    let amp = (FRAC_2_PI / x).sqrt();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// The first `count` positive zeros of `J_ν`, `ν = twice_order / 2`.
pub fn bessel_j_zeros(twice_order: u32, count: usize) -> Vec<f64> {
    let nu = twice_order as f64 / 2.0;
    let f = |x: f64| bessel_j(twice_order, x);
    let mut zeros = Vec::with_capacity(count);
    // No zero of J_ν lies below ν.
    let mut lo = nu.max(0.5);
    let mut f_lo = f(lo);
    let step = 0.25;
    while zeros.len() < count {
        let hi = lo + step;
        let f_hi = f(hi);
        if f_lo == 0.0 {
            zeros.push(lo);
        } else if f_lo.signum() != f_hi.signum() {
            let z = refine_zero(twice_order, lo, hi, f_lo);
            zeros.push(z);
            // Consecutive zeros are separated by more than π.
            lo = z + 2.5;
            f_lo = f(lo);
            continue;
        }
        lo = hi;
        f_lo = f_hi;
    }
    zeros
}

/// Safeguarded Newton iteration on a bracketing interval.
fn refine_zero(twice_order: u32, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let nu = twice_order as f64 / 2.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..100 {
        let fx = bessel_j(twice_order, x);
        if fx == 0.0 {
            return x;
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
        } else {
            hi = x;
        }
        let deriv = nu / x * fx - bessel_j(twice_order + 2, x);
        let mut next = x - fx / deriv;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x {
            return next;
        }
        x = next;
    }
    x
}
