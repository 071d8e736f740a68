//! The Faddeeva function `w(z) = e^{-z^2} erfc(-iz)` and the scaled
//! complementary error function `erfcx`, needed for the closed-form Laplace
//! transform of the truncated-Gaussian memory kernel.
//!
//! Uses Weideman's rational approximation (SIAM J. Numer. Anal. 31, 1994):
//! a single polynomial in the Moebius-transformed variable, valid in the
//! upper half plane, with coefficients computed once by a discrete Fourier
//! transform of the equioscillation samples.

use num_complex::Complex64 as C64;
use once_cell::sync::Lazy;
use std::f64::consts::PI;

/// Polynomial degree of the rational approximation. Degree 40 gives
/// ~1e-14 relative accuracy across the upper half plane.
const DEGREE: usize = 40;

/// (L, coefficients highest-order-first) for the Weideman approximation.
static WEIDEMAN: Lazy<(f64, Vec<f64>)> = Lazy::new(|| {
    let n = DEGREE;
    let m = 2 * n;
    let m2 = 2 * m;
    let l = (n as f64 / std::f64::consts::SQRT_2).sqrt();
    // samples f(theta_k) = exp(-t^2)(L^2 + t^2), t = L tan(theta/2), with a
    // leading zero for the theta = -pi endpoint
    let mut f = vec![0.0_f64; m2];
    for (idx, k) in (-(m as i64) + 1..=(m as i64) - 1).enumerate() {
        let theta = k as f64 * PI / m as f64;
        let t = l * (theta / 2.0).tan();
        f[idx + 1] = (-t * t).exp() * (l * l + t * t);
    }
    // fftshift then a real DFT; only the n leading Taylor-like coefficients
    // are kept (direct O(m2^2) sum, computed once)
    let shifted: Vec<f64> = (0..m2).map(|i| f[(i + m2 / 2) % m2]).collect();
    let mut coeffs = Vec::with_capacity(n);
    for q in 1..=n {
        let mut acc = 0.0;
        for (i, &g) in shifted.iter().enumerate() {
            let phase = -2.0 * PI * (q * i) as f64 / m2 as f64;
            acc += g * phase.cos();
        }
        coeffs.push(acc / m2 as f64);
    }
    coeffs.reverse(); // highest order first for Horner evaluation
    (l, coeffs)
});

/// Faddeeva function for `Im z >= 0`.
pub fn w_upper(z: C64) -> C64 {
    debug_assert!(z.im >= -1e-14, "w_upper requires the closed upper half plane");
    let (l, coeffs) = &*WEIDEMAN;
    let l = C64::new(*l, 0.0);
    let iz = C64::new(0.0, 1.0) * z;
    let denom = l - iz;
    let zz = (l + iz) / denom;
    let mut p = C64::new(0.0, 0.0);
    for &a in coeffs {
        p = p * zz + C64::new(a, 0.0);
    }
    2.0 * p / (denom * denom) + C64::new(1.0 / PI.sqrt(), 0.0) / denom
}

/// Scaled complementary error function `erfcx(z) = e^{z^2} erfc(z)` for any
/// complex argument, via `erfcx(z) = w(iz)` and the reflection
/// `erfcx(-z) = 2 e^{z^2} - erfcx(z)`.
pub fn erfcx(z: C64) -> C64 {
    if z.re >= 0.0 {
        w_upper(C64::new(0.0, 1.0) * z)
    } else {
        2.0 * (z * z).exp() - w_upper(C64::new(0.0, 1.0) * (-z))
    }
}

/// Real error function.
pub fn erf_real(x: f64) -> f64 {
    if x < 0.0 {
        return -erf_real(-x);
    }
    let e = erfcx(C64::new(x, 0.0)).re * (-x * x).exp();
    1.0 - e
}
